//! Fixtures shared by the benchmarks.

use mergeshield_core::{RoadNetwork, ScenarioConfig, ShieldConfig, ShieldMode, World};

/// Spawned world with the default geometry and `n` vehicles.
pub fn dense_world(n: usize, mode: ShieldMode, seed: u64) -> World {
    let scenario = ScenarioConfig {
        n_vehicles: n,
        rng_seed: seed,
        ..ScenarioConfig::default()
    };
    World::spawn(RoadNetwork::default(), scenario, ShieldConfig::with_mode(mode))
        .expect("default geometry fits the reference fleet")
}
