use super::road::RoadNetwork;
use super::scenario::ScenarioConfig;
use super::vehicle::Vehicle;
use crate::dynamics::ControlInput;

// below this speed the lane tracker does not steer
const STEER_MIN_SPEED: f64 = 5.0;

/// Low-level tracking of a speed command and a lane centreline.
///
/// Speed: `a = K_v (v_safe - v)`. Lateral: the travel direction is steered
/// toward `asin(k_y e_y / v)` (bounded by `max_heading`) with a proportional
/// yaw-rate demand, inverted through the bicycle model to a steering angle.
/// The slip angle stays within `max_heading`. Below `STEER_MIN_SPEED` the
/// lane is not tracked and the slip angle instead points the actuation along
/// the direction of travel. Both channels are saturated at the actuator limits.
pub fn track(ego: &Vehicle, v_safe: f64, road: &RoadNetwork, sc: &ScenarioConfig) -> ControlInput {
    let p = &ego.params;
    let v = ego.speed();
    let a = sc.speed_gain * (v_safe - v);

    let beta_lim = p.beta_max().min(sc.max_heading);
    let theta = ego.state.v_y.atan2(ego.state.v_x);
    let beta = if v < 1e-6 {
        0.0
    } else if v < STEER_MIN_SPEED {
        (theta - ego.state.psi).clamp(-beta_lim, beta_lim)
    } else {
        let e_y = road.centerline(ego.target_lane) - ego.state.y;
        let vy_des = sc.lateral_gain * e_y;
        let theta_des = (vy_des / v).clamp(-1.0, 1.0).asin().clamp(-sc.max_heading, sc.max_heading);
        let yaw_rate = sc.heading_gain * (theta_des - theta);
        let sin_beta = (yaw_rate * p.length / (2.0 * v)).clamp(-1.0, 1.0);
        sin_beta.asin().clamp(-beta_lim, beta_lim)
    };
    let delta = (2.0 * beta.tan()).atan();
    ControlInput { a, delta }.saturate(p)
}
