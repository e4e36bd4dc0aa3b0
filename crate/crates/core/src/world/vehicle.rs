use std::fmt;

use serde::{Deserialize, Serialize};

use super::road::Lane;
use crate::dynamics::{VehicleParams, VehicleState};
use crate::policy::BehaviorAction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VehicleId(pub u32);

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaneChangePhase {
    NotChanging,
    Changing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub id: VehicleId,
    pub state: VehicleState,
    pub params: VehicleParams,
    pub lane: Lane,
    pub target_lane: Lane,
    pub behavior: BehaviorAction,
    pub lc_phase: LaneChangePhase,
    /// Distance travelled on the merging lane.
    pub x_m: f64,
    pub spawn_lane: Lane,
    pub merged: bool,
    pub crashed: bool,
    /// Ran out of acceleration lane without merging; the vehicle has left the road.
    pub failed_merge: bool,
}

impl Vehicle {
    pub fn new(id: VehicleId, state: VehicleState, params: VehicleParams, lane: Lane) -> Self {
        Self {
            id,
            state,
            params,
            lane,
            target_lane: lane,
            behavior: BehaviorAction::FollowLane,
            lc_phase: LaneChangePhase::NotChanging,
            x_m: 0.0,
            spawn_lane: lane,
            merged: false,
            crashed: false,
            failed_merge: false,
        }
    }

    pub fn is_changing(&self) -> bool {
        self.lc_phase == LaneChangePhase::Changing
    }

    /// Still on the road (crashed vehicles stay as static obstacles).
    pub fn on_road(&self) -> bool {
        !self.failed_merge
    }

    /// On the road and able to act.
    pub fn is_live(&self) -> bool {
        !self.failed_merge && !self.crashed
    }

    pub fn speed(&self) -> f64 {
        self.state.speed()
    }

    pub fn x(&self) -> f64 {
        self.state.x
    }

    pub fn front(&self) -> f64 {
        self.state.x + 0.5 * self.params.length
    }

    pub fn rear(&self) -> f64 {
        self.state.x - 0.5 * self.params.length
    }

    /// Total order along the road: larger arc position first, smaller id
    /// first on exact ties.
    pub fn is_ahead_of(&self, other: &Vehicle) -> bool {
        ahead_key(self) < ahead_key(other)
    }
}

/// Sort key that lists vehicles front to back.
pub fn ahead_key(v: &Vehicle) -> (std::cmp::Reverse<OrderedX>, VehicleId) {
    (std::cmp::Reverse(OrderedX(v.state.x)), v.id)
}

/// Arc position with a total order (positions are always finite).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderedX(pub f64);

impl Eq for OrderedX {}

impl PartialOrd for OrderedX {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrderedX {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Bumper-to-bumper gap from `follower`'s front to `leader`'s rear.
pub fn bumper_gap(follower: &Vehicle, leader: &Vehicle) -> f64 {
    leader.rear() - follower.front()
}
