use rand::Rng;

use super::road::{Lane, RoadNetwork};
use super::scenario::ScenarioConfig;
use super::vehicle::{Vehicle, VehicleId};
use crate::dynamics::VehicleState;
use crate::error::ConfigError;
use crate::shield::{required_gap, EnvelopeParams};

const MAX_ATTEMPTS: usize = 100;
// standstill gap and extra clearance on top of the braking envelope
const STANDSTILL_GAP: f64 = 2.0;
const CLEARANCE: f64 = 1.0;

/// Places the fleet: highway vehicles first, then ramp vehicles, each lane
/// numbered front to back.
///
/// Every same-lane pair starts at least `spawn_spacing_min` apart and inside
/// the braking envelope of a fully braking leader, which implies a time
/// headway of at least `tau`.
pub fn spawn<R: Rng>(
    config: &ScenarioConfig,
    road: &RoadNetwork,
    rng: &mut R,
) -> Result<Vec<Vehicle>, ConfigError> {
    let n_ramp = config.ramp_count();
    let n_highway = config.n_vehicles - n_ramp;
    let half = 0.5 * config.vehicle.length;
    let lanes = [
        (Lane::Highway, n_highway, half, config.highway_spawn_end),
        (Lane::Ramp, n_ramp, road.ramp_start() + half, road.merge_start),
    ];

    let mut fleet = Vec::with_capacity(config.n_vehicles);
    for (lane, count, lo, hi) in lanes {
        if count == 0 {
            continue;
        }
        let placed = place_lane(config, count, lo, hi, rng).ok_or_else(|| {
            ConfigError::GeometryTooShort(format!(
                "{count} vehicles do not fit on the {lane:?} lane between {lo} m and {hi} m"
            ))
        })?;
        for (x, v) in placed {
            let id = VehicleId(fleet.len() as u32);
            let state = VehicleState::straight(x, road.centerline(lane), v);
            fleet.push(Vehicle::new(id, state, config.vehicle, lane));
        }
    }
    Ok(fleet)
}

/// Centre positions and speeds, front to back.
fn place_lane<R: Rng>(
    config: &ScenarioConfig,
    count: usize,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> Option<Vec<(f64, f64)>> {
    let [v_lo, v_hi] = config.initial_speed_range;
    let p = EnvelopeParams {
        tau: config.tau,
        dt: config.dt,
        follower_brake: -config.vehicle.a_min,
        leader_brake: -config.vehicle.a_min,
        min_gap: STANDSTILL_GAP,
    };
    let len = config.vehicle.length;

    for _ in 0..MAX_ATTEMPTS {
        let speeds: Vec<f64> = (0..count)
            .map(|_| if v_hi > v_lo { rng.gen_range(v_lo..=v_hi) } else { v_lo })
            .collect();
        let gaps: Vec<f64> = speeds
            .windows(2)
            .map(|w| spawn_gap(w[1], w[0], config, &p))
            .collect();
        let span: f64 = gaps.iter().map(|g| g + len).sum();
        let free = hi - lo - span;
        if free < 0.0 {
            continue;
        }
        let weights: Vec<f64> = (0..=count).map(|_| rng.gen::<f64>()).collect();
        let total: f64 = weights.iter().sum::<f64>().max(f64::MIN_POSITIVE);
        let extra: Vec<f64> = weights.iter().map(|w| free * w / total).collect();

        let mut out = Vec::with_capacity(count);
        let mut x = hi - extra[0];
        out.push((x, speeds[0]));
        for k in 1..count {
            x -= len + gaps[k - 1] + extra[k];
            out.push((x, speeds[k]));
        }
        return Some(out);
    }
    None
}

fn spawn_gap(follower: f64, leader: f64, config: &ScenarioConfig, p: &EnvelopeParams) -> f64 {
    let leader_next = (leader + config.vehicle.a_min * config.dt).max(0.0);
    // the gap shrinks by the closing speed during the first step
    let envelope = required_gap(follower, leader_next, 1.0, p) + (follower - leader) * config.dt;
    (envelope + CLEARANCE)
        .max(config.spawn_spacing_min)
        .max(config.tau * follower)
}
