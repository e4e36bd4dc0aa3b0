use serde::{Deserialize, Serialize};

use crate::dynamics::VehicleParams;
use crate::error::ConfigError;

/// Reference fleet sizes of the dense merging scenario.
pub const REFERENCE_FLEET: std::ops::RangeInclusive<usize> = 7..=11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_vehicles: usize,
    /// How many of the vehicles start on the ramp; `None` puts half of them there.
    pub ramp_vehicles: Option<usize>,
    pub comm_range: f64,
    pub perception_n: usize,
    pub tau: f64,
    pub dt: f64,
    pub episode_steps: u64,
    pub spawn_spacing_min: f64,
    pub initial_speed_range: [f64; 2],
    pub rng_seed: u64,
    /// Highway vehicles spawn in `[0, highway_spawn_end]`.
    pub highway_spawn_end: f64,
    /// Speed increment applied by speed_up / slow_down.
    pub delta_v_step: f64,
    /// Low-level speed tracking gain; `speed_gain * dt <= 1`.
    pub speed_gain: f64,
    /// Lateral position gain of the lane tracker (1/s).
    pub lateral_gain: f64,
    /// Travel-direction gain of the lane tracker (1/s).
    pub heading_gain: f64,
    /// Largest travel direction the lane tracker commands (rad).
    pub max_heading: f64,
    pub vehicle: VehicleParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_vehicles: 9,
            ramp_vehicles: None,
            comm_range: 180.0,
            perception_n: 5,
            tau: 0.5,
            dt: 0.1,
            episode_steps: 250,
            spawn_spacing_min: 10.0,
            initial_speed_range: [20.0, 25.0],
            rng_seed: 0,
            highway_spawn_end: 230.0,
            delta_v_step: 2.0,
            speed_gain: 10.0,
            lateral_gain: 0.6,
            heading_gain: 3.0,
            max_heading: 0.15,
            vehicle: VehicleParams::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn ramp_count(&self) -> usize {
        self.ramp_vehicles.unwrap_or(self.n_vehicles / 2)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_vehicles < 1 {
            return Err(ConfigError::invalid("scenario.n_vehicles", "must be >= 1"));
        }
        if self.ramp_count() > self.n_vehicles {
            return Err(ConfigError::invalid(
                "scenario.ramp_vehicles",
                "cannot exceed n_vehicles",
            ));
        }
        if !(self.comm_range > 0.0) {
            return Err(ConfigError::invalid("scenario.comm_range", "must be > 0"));
        }
        if !(self.tau > 0.0) {
            return Err(ConfigError::invalid("scenario.tau", "must be > 0"));
        }
        if !(self.dt > 0.0) {
            return Err(ConfigError::invalid("scenario.dt", "must be > 0"));
        }
        if self.episode_steps == 0 {
            return Err(ConfigError::invalid("scenario.episode_steps", "must be >= 1"));
        }
        if !(self.spawn_spacing_min >= 0.0) {
            return Err(ConfigError::invalid("scenario.spawn_spacing_min", "must be >= 0"));
        }
        let [lo, hi] = self.initial_speed_range;
        if !(lo >= 0.0 && hi >= lo && hi <= self.vehicle.v_cap) {
            return Err(ConfigError::invalid(
                "scenario.initial_speed_range",
                "need 0 <= min <= max <= v_cap",
            ));
        }
        if !(self.delta_v_step >= 0.0) {
            return Err(ConfigError::invalid("scenario.delta_v_step", "must be >= 0"));
        }
        if !(self.speed_gain > 0.0 && self.speed_gain * self.dt <= 1.0 + 1e-12) {
            return Err(ConfigError::invalid(
                "scenario.speed_gain",
                "must satisfy 0 < speed_gain * dt <= 1",
            ));
        }
        if !(self.lateral_gain > 0.0 && self.heading_gain > 0.0) {
            return Err(ConfigError::invalid(
                "scenario.lateral_gain/heading_gain",
                "must be > 0",
            ));
        }
        if !(self.max_heading > 0.0 && self.max_heading < std::f64::consts::FRAC_PI_2) {
            return Err(ConfigError::invalid("scenario.max_heading", "must lie in (0, pi/2)"));
        }
        self.vehicle.validate()
    }

    /// Fleet size outside the reference 7-11 range is allowed but flagged.
    pub fn outside_reference_fleet(&self) -> bool {
        !REFERENCE_FLEET.contains(&self.n_vehicles)
    }
}
