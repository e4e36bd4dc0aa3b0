//! Merging road, vehicle population, perception queries and the per-step
//! simulation pipeline.

mod perception;
mod planner;
mod road;
mod scenario;
mod spawn;
mod step;
mod tracking;
mod vehicle;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use perception::{relevant_adjacent_lane, Neighbors, Observation};
pub use planner::{plan_motion, ControlTarget};
pub use road::{Lane, RoadNetwork};
pub use scenario::{ScenarioConfig, REFERENCE_FLEET};
pub use spawn::spawn;
pub use step::{step_world, StepReport};
pub use tracking::track;
pub use vehicle::{ahead_key, bumper_gap, LaneChangePhase, OrderedX, Vehicle, VehicleId};

use crate::error::ConfigError;
use crate::shield::ShieldConfig;

/// Complete simulation state. Vehicles are kept sorted by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub road: RoadNetwork,
    pub scenario: ScenarioConfig,
    pub shield: ShieldConfig,
    pub vehicles: Vec<Vehicle>,
    /// Number of steps taken so far.
    pub step_index: u64,
}

impl World {
    pub fn new(
        road: RoadNetwork,
        scenario: ScenarioConfig,
        shield: ShieldConfig,
        mut vehicles: Vec<Vehicle>,
    ) -> Self {
        vehicles.sort_by_key(|v| v.id);
        Self {
            road,
            scenario,
            shield,
            vehicles,
            step_index: 0,
        }
    }

    /// Validates the configuration and spawns the fleet from `scenario.rng_seed`.
    pub fn spawn(
        road: RoadNetwork,
        scenario: ScenarioConfig,
        shield: ShieldConfig,
    ) -> Result<Self, ConfigError> {
        road.validate()?;
        scenario.validate()?;
        shield.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(scenario.rng_seed);
        let vehicles = spawn(&scenario, &road, &mut rng)?;
        Ok(Self::new(road, scenario, shield, vehicles))
    }

    pub fn vehicle(&self, id: VehicleId) -> Option<&Vehicle> {
        self.vehicles
            .binary_search_by_key(&id, |v| v.id)
            .ok()
            .map(|i| &self.vehicles[i])
    }

    /// Vehicles that still act: on the road and not crashed.
    pub fn live(&self) -> impl Iterator<Item = &Vehicle> {
        self.vehicles.iter().filter(|v| v.is_live())
    }
}
