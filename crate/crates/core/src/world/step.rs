use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::planner::{plan_motion, ControlTarget};
use super::road::Lane;
use super::tracking::track;
use super::vehicle::{LaneChangePhase, Vehicle, VehicleId};
use super::World;
use crate::dynamics::{self, ControlInput};
use crate::error::TopologyError;
use crate::policy::BehaviorAction;
use crate::shield::{joint_safe_control, ShieldOutcome};
use crate::topology::{build_topology, InteractionTopology};

// lane change completes within this fraction of a lane width of the target centreline
const LANE_CHANGE_DONE: f64 = 0.1;

/// Everything decided and observed during one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub plans: BTreeMap<VehicleId, ControlTarget>,
    pub topology: InteractionTopology,
    pub outcomes: BTreeMap<VehicleId, ShieldOutcome>,
    pub controls: BTreeMap<VehicleId, ControlInput>,
    /// Pairs that started overlapping this step.
    pub collisions: Vec<(VehicleId, VehicleId)>,
    pub merged: Vec<VehicleId>,
    pub failed_merges: Vec<VehicleId>,
}

/// Advances `world` by one step. Live vehicles without an entry in
/// `actions` follow their lane.
pub fn step_world(
    world: &mut World,
    actions: &BTreeMap<VehicleId, BehaviorAction>,
) -> Result<StepReport, TopologyError> {
    world.step(actions)
}

impl World {
    pub fn step(
        &mut self,
        actions: &BTreeMap<VehicleId, BehaviorAction>,
    ) -> Result<StepReport, TopologyError> {
        let action_of = |id| actions.get(&id).copied().unwrap_or(BehaviorAction::FollowLane);

        let plans: BTreeMap<VehicleId, ControlTarget> = self
            .live()
            .map(|v| {
                let plan = plan_motion(v, action_of(v.id), &self.road, self.scenario.delta_v_step);
                (v.id, plan)
            })
            .collect();
        let topology = build_topology(self);
        let outcomes = joint_safe_control(self, &topology, &plans)?;

        let mut controls = BTreeMap::new();
        let (road, scenario) = (&self.road, &self.scenario);
        for v in self.vehicles.iter_mut().filter(|v| v.is_live()) {
            v.behavior = action_of(v.id);
            let outcome = &outcomes[&v.id];
            let plan = &plans[&v.id];
            if plan.requests_change(v) && outcome.lane_change_allowed {
                v.target_lane = plan.target_lane;
                v.lc_phase = LaneChangePhase::Changing;
            }
            let u = track(v, outcome.v_safe, road, scenario);
            // every vehicle integrates from its own pre-step state only
            v.state = dynamics::step(&v.state, &v.params, &u, scenario.dt);
            controls.insert(v.id, u);
        }

        let collisions = self.detect_collisions();
        let (merged, failed_merges) = self.update_lanes();
        self.step_index += 1;

        Ok(StepReport {
            plans,
            topology,
            outcomes,
            controls,
            collisions,
            merged,
            failed_merges,
        })
    }

    fn detect_collisions(&mut self) -> Vec<(VehicleId, VehicleId)> {
        let mut pairs = Vec::new();
        let n = self.vehicles.len();
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (&self.vehicles[i], &self.vehicles[j]);
                if !a.on_road() || !b.on_road() || (a.crashed && b.crashed) {
                    continue;
                }
                if overlaps(a, b) {
                    pairs.push((a.id, b.id));
                }
            }
        }
        for &(a, b) in &pairs {
            for v in self.vehicles.iter_mut().filter(|v| v.id == a || v.id == b) {
                v.crashed = true;
                v.state.v_x = 0.0;
                v.state.v_y = 0.0;
            }
        }
        pairs
    }

    fn update_lanes(&mut self) -> (Vec<VehicleId>, Vec<VehicleId>) {
        let mut merged = Vec::new();
        let mut failed = Vec::new();
        let road = &self.road;
        for v in self.vehicles.iter_mut().filter(|v| v.on_road()) {
            if v.is_changing() {
                let err = (v.state.y - road.centerline(v.target_lane)).abs();
                if err < LANE_CHANGE_DONE * road.lane_width {
                    v.lane = v.target_lane;
                    v.lc_phase = LaneChangePhase::NotChanging;
                    if v.spawn_lane == Lane::Ramp && v.lane == Lane::Highway && !v.merged {
                        v.merged = true;
                        merged.push(v.id);
                    }
                }
            }
            if v.lane == Lane::Ramp {
                v.x_m = road.merge_progress(v.state.x);
                if !v.is_changing() && !v.crashed && v.front() > road.merge_end() {
                    v.failed_merge = true;
                    failed.push(v.id);
                }
            }
        }
        (merged, failed)
    }
}

/// Axis-aligned footprint overlap.
fn overlaps(a: &Vehicle, b: &Vehicle) -> bool {
    let dx = (a.state.x - b.state.x).abs();
    let dy = (a.state.y - b.state.y).abs();
    dx < 0.5 * (a.params.length + b.params.length) && dy < 0.5 * (a.params.width + b.params.width)
}
