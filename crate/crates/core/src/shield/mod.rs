//! Safety layer: barrier constraints, the worst-case (HSS) and collaborative
//! (MASS) speed filters, lane-change gating and the fleet-wide joint pass.

mod constraint;
mod envelope;
mod filter;
mod joint;
mod qp;

use serde::{Deserialize, Serialize};

pub use constraint::{AffineConstraint, ConstraintId, ConstraintKind};
pub use envelope::{envelope_margin, max_safe_speed, min_leader_speed, required_gap, EnvelopeParams};
pub use filter::{
    allow_lane_change, braking_envelope, filter_hss, filter_mass, lateral_cbfs, longitudinal_cbf,
    ObservedNeighbors,
};
pub use joint::joint_safe_control;
pub use qp::{kkt_residual, objective, solve_qp, KktResidual, QpSolution};

use crate::dynamics::VehicleParams;
use crate::error::ConfigError;
use crate::world::{Vehicle, VehicleId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShieldMode {
    None,
    Hss,
    Mass,
}

impl std::str::FromStr for ShieldMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(ShieldMode::None),
            "hss" => Ok(ShieldMode::Hss),
            "mass" => Ok(ShieldMode::Mass),
            other => Err(format!("unknown shield mode `{other}` (none|hss|mass)")),
        }
    }
}

impl std::fmt::Display for ShieldMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ShieldMode::None => "none",
            ShieldMode::Hss => "hss",
            ShieldMode::Mass => "mass",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShieldConfig {
    pub mode: ShieldMode,
    /// Longitudinal time-headway threshold (s).
    pub tau: f64,
    /// Discrete barrier decay rate in (0, 1].
    pub eta: f64,
    /// Slack penalty.
    pub k_eps: f64,
    /// Worst-case leader acceleration (negative).
    pub wc_brake: f64,
    /// Worst-case rear-vehicle acceleration (positive).
    pub wc_accel: f64,
    /// Lateral time-headway threshold (s).
    pub tau_lat: f64,
    /// Bumper gap the braking envelope keeps at standstill (m).
    pub min_gap: f64,
}

impl Default for ShieldConfig {
    fn default() -> Self {
        let vehicle = VehicleParams::default();
        Self {
            mode: ShieldMode::Mass,
            tau: 0.5,
            eta: 0.5,
            k_eps: 1e6,
            wc_brake: vehicle.a_min,
            wc_accel: vehicle.a_max,
            tau_lat: 0.5,
            min_gap: 2.0,
        }
    }
}

impl ShieldConfig {
    pub fn with_mode(mode: ShieldMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.tau > 0.0) {
            return Err(ConfigError::invalid("shield.tau", "must be > 0"));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(ConfigError::invalid("shield.eta", "must lie in (0, 1]"));
        }
        if !(self.k_eps > 0.0) {
            return Err(ConfigError::invalid("shield.k_eps", "must be > 0"));
        }
        if !(self.wc_brake < 0.0) {
            return Err(ConfigError::invalid("shield.wc_brake", "must be < 0"));
        }
        if !(self.wc_accel >= 0.0) {
            return Err(ConfigError::invalid("shield.wc_accel", "must be >= 0"));
        }
        if !(self.tau_lat > 0.0) {
            return Err(ConfigError::invalid("shield.tau_lat", "must be > 0"));
        }
        if !(self.min_gap >= 0.0) {
            return Err(ConfigError::invalid("shield.min_gap", "must be >= 0"));
        }
        Ok(())
    }

    pub(crate) fn envelope(&self, follower: &Kin, dt: f64) -> EnvelopeParams {
        EnvelopeParams {
            tau: self.tau,
            dt,
            follower_brake: -follower.a_min,
            leader_brake: -self.wc_brake,
            min_gap: self.min_gap,
        }
    }
}

/// Result of filtering one vehicle's nominal speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShieldOutcome {
    pub v_nominal: f64,
    pub v_safe: f64,
    /// `v_safe - v_nominal`.
    pub v_cbf: f64,
    pub lane_change_requested: bool,
    pub lane_change_allowed: bool,
    pub slack_used: f64,
    pub active_constraints: Vec<ConstraintId>,
    /// The QP had no feasible point; the vehicle brakes fully.
    pub fault: bool,
}

impl ShieldOutcome {
    pub fn pass_through(v_nominal: f64) -> Self {
        Self {
            v_nominal,
            v_safe: v_nominal,
            v_cbf: 0.0,
            lane_change_requested: false,
            lane_change_allowed: false,
            slack_used: 0.0,
            active_constraints: Vec::new(),
            fault: false,
        }
    }
}

/// Kinematic summary of a vehicle as seen by the shield.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kin {
    pub id: VehicleId,
    /// Centre arc position.
    pub x: f64,
    pub length: f64,
    pub speed: f64,
    /// Road-aligned share of the speed, `cos` of the travel direction.
    pub share: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub v_cap: f64,
}

impl Kin {
    pub fn of(v: &Vehicle) -> Self {
        Self {
            id: v.id,
            x: v.state.x,
            length: v.params.length,
            speed: if v.crashed { 0.0 } else { v.speed() },
            share: v.state.longitudinal_share(),
            a_min: v.params.a_min,
            a_max: v.params.a_max,
            v_cap: v.params.v_cap,
        }
    }

    pub fn front(&self) -> f64 {
        self.x + 0.5 * self.length
    }

    pub fn rear(&self) -> f64 {
        self.x - 0.5 * self.length
    }

    /// Road-aligned velocity.
    pub fn speed_x(&self) -> f64 {
        self.share * self.speed
    }

    /// Speeds reachable after one step of saturated tracking.
    pub fn reachable(&self, dt: f64) -> (f64, f64) {
        (
            (self.speed + self.a_min * dt).max(0.0),
            (self.speed + self.a_max * dt).min(self.v_cap),
        )
    }
}

/// A vehicle ahead together with the speed it is assumed to hold next step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leader {
    pub kin: Kin,
    pub next_speed: f64,
}

impl Leader {
    /// Leader assumed to brake as hard as the worst case allows.
    pub fn worst_case(kin: Kin, cfg: &ShieldConfig, dt: f64) -> Self {
        Self {
            kin,
            next_speed: (kin.speed + cfg.wc_brake * dt).max(0.0),
        }
    }

    /// Leader that shared its filtered speed; clamped to what tracking can realise.
    pub fn known(kin: Kin, v_safe: f64, dt: f64) -> Self {
        let (lo, hi) = kin.reachable(dt);
        Self {
            kin,
            next_speed: v_safe.clamp(lo, hi),
        }
    }
}

/// Bumper gap from `follower`'s front to `leader`'s rear.
pub fn gap(follower: &Kin, leader: &Kin) -> f64 {
    leader.rear() - follower.front()
}
