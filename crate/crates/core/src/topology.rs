//! Interaction topology: which vehicles' shared decisions each vehicle's
//! safety filter depends on, and an evaluation order that resolves parents
//! before their children.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use crate::error::TopologyError;
use crate::world::{ahead_key, Vehicle, VehicleId, World};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InteractionTopology {
    pub entries: BTreeMap<VehicleId, BTreeSet<VehicleId>>,
}

impl InteractionTopology {
    pub fn parents(&self, id: VehicleId) -> impl Iterator<Item = VehicleId> + '_ {
        self.entries.get(&id).into_iter().flatten().copied()
    }

    /// Directed edges `(child, parent)`.
    pub fn edges(&self) -> impl Iterator<Item = (VehicleId, VehicleId)> + '_ {
        self.entries
            .iter()
            .flat_map(|(c, ps)| ps.iter().map(move |p| (*c, *p)))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Parent sets for every vehicle on the road.
///
/// A vehicle depends on its leader; a vehicle changing into its lane ahead
/// of it (and behind the leader) takes the leader's place; a vehicle that is
/// itself changing lanes also depends on the leader in its target lane. Rear
/// vehicles are never parents.
pub fn build_topology(world: &World) -> InteractionTopology {
    let mut entries = BTreeMap::new();
    for ego in world.vehicles.iter().filter(|v| v.on_road()) {
        let nb = world.neighbors(ego);
        let mut parents = BTreeSet::new();
        if let Some(ol) = nb.leader {
            parents.insert(ol.id);
        }
        if let Some(oal) = nb.adjacent_leader {
            let cuts_in = oal.is_changing()
                && oal.target_lane == ego.lane
                && nb.leader.is_none_or(|ol| ol.is_ahead_of(oal));
            if cuts_in {
                parents.clear();
                parents.insert(oal.id);
            }
            if ego.is_changing() {
                parents.insert(oal.id);
            }
        }
        entries.insert(ego.id, parents);
    }
    InteractionTopology { entries }
}

/// Front-to-back order in which every parent precedes its children.
pub fn evaluation_order(
    topology: &InteractionTopology,
    vehicles: &[Vehicle],
) -> Result<Vec<VehicleId>, TopologyError> {
    let by_id: BTreeMap<VehicleId, &Vehicle> = vehicles.iter().map(|v| (v.id, v)).collect();
    let mut pending: BTreeMap<VehicleId, usize> = BTreeMap::new();
    let mut children: BTreeMap<VehicleId, Vec<VehicleId>> = BTreeMap::new();
    for v in vehicles {
        pending.insert(v.id, 0);
    }
    for (child, parent) in topology.edges() {
        if !by_id.contains_key(&child) {
            return Err(TopologyError::UnknownVehicle(child));
        }
        if !by_id.contains_key(&parent) {
            return Err(TopologyError::UnknownVehicle(parent));
        }
        *pending.get_mut(&child).expect("checked above") += 1;
        children.entry(parent).or_default().push(child);
    }

    let mut ready: BinaryHeap<Reverse<_>> = pending
        .iter()
        .filter(|(_, n)| **n == 0)
        .map(|(id, _)| Reverse(ahead_key(by_id[id])))
        .collect();
    let mut order = Vec::with_capacity(vehicles.len());
    while let Some(Reverse((_, id))) = ready.pop() {
        order.push(id);
        for child in children.get(&id).into_iter().flatten() {
            let n = pending.get_mut(child).expect("known vehicle");
            *n -= 1;
            if *n == 0 {
                ready.push(Reverse(ahead_key(by_id[child])));
            }
        }
    }
    if order.len() < vehicles.len() {
        let stuck = pending
            .iter()
            .find(|(id, n)| **n > 0 && !order.contains(id))
            .map(|(id, _)| *id)
            .expect("unresolved vehicle exists");
        return Err(TopologyError::Cycle(stuck));
    }
    Ok(order)
}
