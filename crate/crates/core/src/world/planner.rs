use serde::{Deserialize, Serialize};

use super::road::{Lane, RoadNetwork};
use super::vehicle::Vehicle;
use crate::policy::BehaviorAction;

/// Motion-planning reference handed to the safety layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlTarget {
    pub v_nominal: f64,
    pub target_lane: Lane,
}

impl ControlTarget {
    /// True when the plan asks `ego` to start a new lane change.
    pub fn requests_change(&self, ego: &Vehicle) -> bool {
        !ego.is_changing() && self.target_lane != ego.lane
    }
}

/// Maps a behavioural action onto a speed reference and a lane target.
///
/// Lateral actions without a reachable adjacent lane, or issued while a lane
/// change is already running, degrade to following the lane.
pub fn plan_motion(
    ego: &Vehicle,
    action: BehaviorAction,
    road: &RoadNetwork,
    delta_v_step: f64,
) -> ControlTarget {
    let v = ego.speed();
    let v_nominal = match action {
        BehaviorAction::SpeedUp => v + delta_v_step,
        BehaviorAction::SlowDown => v - delta_v_step,
        _ => v,
    }
    .clamp(0.0, ego.params.v_cap);

    let target_lane = if ego.is_changing() {
        ego.target_lane
    } else {
        let left = match action {
            BehaviorAction::LaneLeft => Some(true),
            BehaviorAction::LaneRight => Some(false),
            _ => None,
        };
        left.and_then(|l| road.lane_change_target(ego.lane, ego.state.x, l))
            .unwrap_or(ego.lane)
    };
    ControlTarget {
        v_nominal,
        target_lane,
    }
}
