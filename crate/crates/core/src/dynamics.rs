//! Kinematic bicycle model and the fixed-step integrator shared by every vehicle.

use serde::{Deserialize, Serialize};

use crate::error::DomainError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleParams {
    /// Wheelbase-equivalent length used by the yaw-rate term, also the footprint length.
    pub length: f64,
    pub width: f64,
    pub a_max: f64,
    /// Maximum braking, negative.
    pub a_min: f64,
    pub delta_max: f64,
    pub v_cap: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            length: 5.0,
            width: 2.0,
            a_max: 5.0,
            a_min: -5.0,
            delta_max: std::f64::consts::FRAC_PI_4,
            v_cap: 40.0,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<(), crate::error::ConfigError> {
        use crate::error::ConfigError;
        if !(self.length > 0.0) {
            return Err(ConfigError::invalid("vehicle.length", "must be > 0"));
        }
        if !(self.width > 0.0) {
            return Err(ConfigError::invalid("vehicle.width", "must be > 0"));
        }
        if !(self.a_min < 0.0 && self.a_max > 0.0) {
            return Err(ConfigError::invalid(
                "vehicle.a_min/a_max",
                "require a_min < 0 < a_max",
            ));
        }
        if !(self.delta_max > 0.0 && self.delta_max < std::f64::consts::FRAC_PI_2) {
            return Err(ConfigError::invalid(
                "vehicle.delta_max",
                "must lie in (0, pi/2)",
            ));
        }
        if !(self.v_cap > 0.0) {
            return Err(ConfigError::invalid("vehicle.v_cap", "must be > 0"));
        }
        Ok(())
    }

    /// Largest slip angle reachable within the steering limit.
    pub fn beta_max(&self) -> f64 {
        (0.5 * self.delta_max.tan()).atan()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub v_x: f64,
    pub v_y: f64,
    /// Heading relative to the road direction.
    pub psi: f64,
}

impl VehicleState {
    pub fn straight(x: f64, y: f64, speed: f64) -> Self {
        Self {
            x,
            y,
            v_x: speed,
            v_y: 0.0,
            psi: 0.0,
        }
    }

    pub fn speed(&self) -> f64 {
        self.v_x.hypot(self.v_y)
    }

    /// Cosine of the travel direction: the share of speed that advances the
    /// vehicle along the road.
    pub fn longitudinal_share(&self) -> f64 {
        let v = self.speed();
        if v > 1e-9 {
            self.v_x / v
        } else {
            1.0
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite()
            && self.y.is_finite()
            && self.v_x.is_finite()
            && self.v_y.is_finite()
            && self.psi.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    pub a: f64,
    pub delta: f64,
}

impl ControlInput {
    /// Clamps both channels into the actuator envelope.
    pub fn saturate(self, params: &VehicleParams) -> Self {
        Self {
            a: self.a.clamp(params.a_min, params.a_max),
            delta: self.delta.clamp(-params.delta_max, params.delta_max),
        }
    }
}

/// Slip angle at the centre of gravity, `atan(tan(delta) / 2)`.
pub fn slip_angle(delta: f64) -> Result<f64, DomainError> {
    if !delta.is_finite() {
        return Err(DomainError::NonFinite {
            what: "steering angle",
            value: delta,
        });
    }
    Ok((0.5 * delta.tan()).atan())
}

/// One explicit Euler step of the kinematic bicycle model.
///
/// Positions advance with the start-of-step velocity. The velocity vector
/// receives the actuation `a` along `psi + beta` and is rotated with the yaw
/// rate `(2 v / length) sin(beta)`, so a steered vehicle at constant speed
/// still turns. With `delta = 0` the rotation vanishes and the update is the
/// plain point-mass form. Braking brings the vehicle to rest but never
/// reverses it: a braking step whose new velocity does not point along the
/// old one ends at standstill. The resulting speed is saturated at `v_cap`.
pub fn step(state: &VehicleState, params: &VehicleParams, u: &ControlInput, dt: f64) -> VehicleState {
    debug_assert!(dt > 0.0);
    // delta is bounded by delta_max < pi/2 so tan stays finite
    let beta = (0.5 * u.delta.tan()).atan();
    let v = state.speed();
    let yaw_rate = 2.0 * v / params.length * beta.sin();
    let heading = state.psi + beta;

    let mut next = VehicleState {
        x: state.x + state.v_x * dt,
        y: state.y + state.v_y * dt,
        v_x: state.v_x + (u.a * heading.cos() - yaw_rate * state.v_y) * dt,
        v_y: state.v_y + (u.a * heading.sin() + yaw_rate * state.v_x) * dt,
        psi: state.psi + yaw_rate * dt,
    };

    if u.a < 0.0 && next.v_x * state.v_x + next.v_y * state.v_y <= 0.0 {
        next.v_x = 0.0;
        next.v_y = 0.0;
    }

    let speed = next.speed();
    if speed > params.v_cap {
        let scale = params.v_cap / speed;
        next.v_x *= scale;
        next.v_y *= scale;
    }
    next
}
