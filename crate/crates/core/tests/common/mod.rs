#![allow(dead_code)]

use mergeshield_core::world::LaneChangePhase;
use mergeshield_core::{
    Lane, RoadNetwork, ScenarioConfig, ShieldConfig, ShieldMode, Vehicle, VehicleId, VehicleParams,
    VehicleState, World,
};
use rand::Rng;

pub fn car(id: u32, lane: Lane, x: f64, v: f64) -> Vehicle {
    let road = RoadNetwork::default();
    Vehicle::new(
        VehicleId(id),
        VehicleState::straight(x, road.centerline(lane), v),
        VehicleParams::default(),
        lane,
    )
}

pub fn changing(mut v: Vehicle, to: Lane) -> Vehicle {
    v.target_lane = to;
    v.lc_phase = LaneChangePhase::Changing;
    v
}

pub fn world_of(mode: ShieldMode, vehicles: Vec<Vehicle>) -> World {
    World::new(
        RoadNetwork::default(),
        ScenarioConfig::default(),
        ShieldConfig::with_mode(mode),
        vehicles,
    )
}

/// Unstructured snapshot: arbitrary lanes, positions over more than one
/// communication range, lane changes in either direction, some crashed and
/// some departed vehicles, and occasional exact position ties.
pub fn random_snapshot<R: Rng>(rng: &mut R, n: usize) -> World {
    let road = RoadNetwork::default();
    let mut xs: Vec<f64> = Vec::with_capacity(n);
    let vehicles = (0..n)
        .map(|i| {
            let lane = if rng.gen_bool(0.5) { Lane::Highway } else { Lane::Ramp };
            let x = if !xs.is_empty() && rng.gen_bool(0.05) {
                xs[rng.gen_range(0..xs.len())]
            } else {
                rng.gen_range(0.0..450.0)
            };
            xs.push(x);
            let y = road.centerline(lane) + rng.gen_range(-1.5..1.5);
            let mut v = Vehicle::new(
                VehicleId(i as u32),
                VehicleState {
                    x,
                    y,
                    v_x: rng.gen_range(0.0..35.0),
                    v_y: rng.gen_range(-1.0..1.0),
                    psi: rng.gen_range(-0.1..0.1),
                },
                VehicleParams::default(),
                lane,
            );
            if rng.gen_bool(0.3) {
                v = changing(v, lane.neighbor());
            }
            v.crashed = rng.gen_bool(0.05);
            v.failed_merge = rng.gen_bool(0.05);
            v
        })
        .collect();
    World::new(
        road,
        ScenarioConfig::default(),
        ShieldConfig::default(),
        vehicles,
    )
}

/// Snapshot with two lanes of traffic in a plausible driving configuration:
/// no overlaps, everyone within range, some ramp vehicles mid-change.
pub fn random_traffic<R: Rng>(rng: &mut R, mode: ShieldMode, n: usize) -> World {
    let road = RoadNetwork::default();
    let mut vehicles = Vec::with_capacity(n);
    let mut next_x = [rng.gen_range(150.0..200.0), rng.gen_range(150.0..200.0)];
    for i in 0..n {
        let k = rng.gen_range(0..2);
        let lane = [Lane::Highway, Lane::Ramp][k];
        let x = next_x[k];
        next_x[k] -= rng.gen_range(12.0..40.0);
        let mut v = car(i as u32, lane, x, rng.gen_range(5.0..30.0));
        if lane == Lane::Ramp && rng.gen_bool(0.4) {
            v = changing(v, Lane::Highway);
            v.state.y += rng.gen_range(0.0..2.0);
        }
        vehicles.push(v);
    }
    World::new(road, ScenarioConfig::default(), ShieldConfig::with_mode(mode), vehicles)
}
