//! Per-vehicle rewards and their neighbourhood average.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::world::{bumper_gap, Lane, Vehicle, VehicleId, World};

/// Speed floor for the headway ratio.
pub const V_FLOOR: f64 = 1.0;
// smallest gap fed to the logarithm
const DX_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardKind {
    /// Collision, speed, headway and merge terms.
    Default,
    /// Speed, headway and merge terms only.
    Custom,
}

impl std::str::FromStr for RewardKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "default" => Ok(RewardKind::Default),
            "custom" => Ok(RewardKind::Custom),
            other => Err(format!("unknown reward `{other}` (default|custom)")),
        }
    }
}

impl std::fmt::Display for RewardKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RewardKind::Default => "default",
            RewardKind::Custom => "custom",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardWeights {
    pub w_c: f64,
    pub w_s: f64,
    pub w_h: f64,
    pub w_m: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub tau: f64,
    pub merge_length: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            w_c: 200.0,
            w_s: 4.0,
            w_h: 1.0,
            w_m: 8.0,
            v_min: 10.0,
            v_max: 30.0,
            tau: 0.5,
            merge_length: 100.0,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.v_min > 0.0 && self.v_max > self.v_min) {
            return Err(ConfigError::invalid("reward.v_min/v_max", "need 0 < v_min < v_max"));
        }
        if !(self.tau > 0.0) {
            return Err(ConfigError::invalid("reward.tau", "must be > 0"));
        }
        if !(self.merge_length > 0.0) {
            return Err(ConfigError::invalid("reward.merge_length", "must be > 0"));
        }
        let weights = [self.w_c, self.w_s, self.w_h, self.w_m];
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(ConfigError::invalid("reward.w_*", "must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub kind: RewardKind,
    pub weights: RewardWeights,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            kind: RewardKind::Custom,
            weights: RewardWeights::default(),
        }
    }
}

/// `-ln(dx / (tau v))`: zero at the desired headway, positive when closer.
pub fn headway_reward(dx_ol: f64, v_e: f64, tau: f64) -> f64 {
    let v = v_e.max(V_FLOOR);
    let dx = dx_ol.max(DX_FLOOR);
    -(dx / (tau * v)).ln()
}

pub fn speed_reward(v_e: f64, v_min: f64, v_max: f64) -> f64 {
    ((v_e - v_min) / (v_max - v_min)).min(1.0)
}

/// `-exp(-(x_m - L)^2 / (10 L))`, reaching -1 at the end of the merging lane.
pub fn merge_reward(x_m: f64, merge_length: f64) -> f64 {
    let d = x_m - merge_length;
    -(-(d * d) / (10.0 * merge_length)).exp()
}

/// The quantities an individual reward depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardInputs {
    /// Bumper gap to the same-lane leader.
    pub dx_ol: Option<f64>,
    pub speed: f64,
    /// Distance travelled on the merging lane, present while on it.
    pub x_m: Option<f64>,
    pub crashed: bool,
}

impl RewardInputs {
    pub fn of(world: &World, v: &Vehicle) -> Self {
        Self {
            dx_ol: world.neighbors(v).leader.map(|l| bumper_gap(v, l)),
            speed: v.speed(),
            x_m: (v.lane == Lane::Ramp).then_some(v.x_m),
            crashed: v.crashed,
        }
    }
}

pub fn custom_reward(inputs: &RewardInputs, w: &RewardWeights) -> f64 {
    let r_h = inputs.dx_ol.map_or(0.0, |dx| headway_reward(dx, inputs.speed, w.tau));
    let r_s = speed_reward(inputs.speed, w.v_min, w.v_max);
    let r_m = inputs.x_m.map_or(0.0, |x| merge_reward(x, w.merge_length));
    w.w_h * r_h + w.w_s * r_s + w.w_m * r_m
}

pub fn default_reward(inputs: &RewardInputs, w: &RewardWeights) -> f64 {
    let r_c = if inputs.crashed { -1.0 } else { 0.0 };
    w.w_c * r_c + custom_reward(inputs, w)
}

pub fn individual_reward(inputs: &RewardInputs, cfg: &RewardConfig) -> f64 {
    match cfg.kind {
        RewardKind::Default => default_reward(inputs, &cfg.weights),
        RewardKind::Custom => custom_reward(inputs, &cfg.weights),
    }
}

/// Mean individual reward over `ego` and the vehicles it observes.
pub fn overall_reward(world: &World, ego: &Vehicle, individual: impl Fn(&Vehicle) -> f64) -> f64 {
    let observed = observed_vehicles(world, ego);
    let total: f64 = individual(ego) + observed.iter().map(|v| individual(v)).sum::<f64>();
    total / (observed.len() + 1) as f64
}

fn observed_vehicles<'a>(world: &'a World, ego: &'a Vehicle) -> Vec<&'a Vehicle> {
    let mut others: Vec<(f64, &Vehicle)> = world
        .visible(ego)
        .map(|v| ((v.state.x - ego.state.x).hypot(v.state.y - ego.state.y), v))
        .collect();
    others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.id.cmp(&b.1.id)));
    others
        .into_iter()
        .take(world.scenario.perception_n)
        .map(|(_, v)| v)
        .collect()
}

/// Neighbourhood-averaged reward of every vehicle still on the road.
pub fn fleet_rewards(world: &World, cfg: &RewardConfig) -> BTreeMap<VehicleId, f64> {
    let individual: BTreeMap<VehicleId, f64> = world
        .vehicles
        .iter()
        .filter(|v| v.on_road())
        .map(|v| (v.id, individual_reward(&RewardInputs::of(world, v), cfg)))
        .collect();
    world
        .vehicles
        .iter()
        .filter(|v| v.on_road())
        .map(|ego| (ego.id, overall_reward(world, ego, |v| individual[&v.id])))
        .collect()
}
