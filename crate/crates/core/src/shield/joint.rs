use std::collections::BTreeMap;

use super::filter::{allow_lane_change, filter_hss, filter_mass, ObservedNeighbors};
use super::{Kin, Leader, ShieldMode, ShieldOutcome};
use crate::error::TopologyError;
use crate::topology::{evaluation_order, InteractionTopology};
use crate::world::{ControlTarget, Vehicle, VehicleId, World};

/// Filters every planned vehicle in topology order, so that each vehicle sees
/// the already-resolved decisions of its parents.
///
/// Lane-change requests are granted only when the lateral barriers hold; a
/// vehicle whose filter faults brakes fully and keeps its lane.
pub fn joint_safe_control(
    world: &World,
    topology: &InteractionTopology,
    plans: &BTreeMap<VehicleId, ControlTarget>,
) -> Result<BTreeMap<VehicleId, ShieldOutcome>, TopologyError> {
    let cfg = &world.shield;
    let dt = world.scenario.dt;
    let mut outcomes: BTreeMap<VehicleId, ShieldOutcome> = BTreeMap::new();

    for id in evaluation_order(topology, &world.vehicles)? {
        let Some(plan) = plans.get(&id) else {
            continue;
        };
        let ego = world.vehicle(id).ok_or(TopologyError::UnknownVehicle(id))?;
        let requested = plan.requests_change(ego);

        let outcome = if cfg.mode == ShieldMode::None {
            ShieldOutcome {
                lane_change_requested: requested,
                lane_change_allowed: requested,
                ..ShieldOutcome::pass_through(plan.v_nominal)
            }
        } else {
            let parents: Vec<(Kin, &ShieldOutcome)> = if cfg.mode == ShieldMode::Mass {
                topology
                    .parents(id)
                    .filter_map(|p| Some((Kin::of(world.vehicle(p)?), outcomes.get(&p)?)))
                    .collect()
            } else {
                Vec::new()
            };
            let resolve = |v: &Vehicle| match parents.iter().find(|(k, _)| k.id == v.id) {
                Some((k, o)) => Leader::known(*k, o.v_safe, dt),
                None => Leader::worst_case(Kin::of(v), cfg, dt),
            };

            let ego_kin = Kin::of(ego);
            let nb = world.neighbors(ego);
            let adjacent_leader = nb.adjacent_leader.map(resolve);
            let adjacent_rear = nb.adjacent_rear.map(Kin::of);
            let allowed = requested
                && allow_lane_change(
                    &ego_kin,
                    adjacent_leader.as_ref(),
                    adjacent_rear.as_ref(),
                    cfg,
                    dt,
                );
            let lateral = ego.is_changing() || allowed;

            let mut leaders: Vec<Kin> = Vec::with_capacity(3);
            let mut add = |v: &Vehicle| {
                if leaders.iter().all(|k| k.id != v.id) {
                    leaders.push(Kin::of(v));
                }
            };
            nb.leader.into_iter().for_each(&mut add);
            world.merging_into(ego).into_iter().for_each(&mut add);
            if lateral {
                nb.adjacent_leader.into_iter().for_each(&mut add);
            }
            let neighbors = ObservedNeighbors {
                leaders,
                lateral: lateral.then(|| (nb.adjacent_leader.map(Kin::of), adjacent_rear)),
            };

            let mut out = match cfg.mode {
                ShieldMode::Mass => {
                    filter_mass(&ego_kin, &parents, &neighbors, plan.v_nominal, cfg, dt)
                }
                _ => filter_hss(&ego_kin, &neighbors, plan.v_nominal, cfg, dt),
            };
            out.lane_change_requested = requested;
            out.lane_change_allowed = allowed && !out.fault;
            out
        };
        outcomes.insert(id, outcome);
    }
    Ok(outcomes)
}
