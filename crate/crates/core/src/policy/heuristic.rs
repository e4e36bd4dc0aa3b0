use super::{ActionMap, BehaviorAction, Policy, StepContext};
use crate::error::ProtocolError;
use crate::shield::{allow_lane_change, Kin, Leader};
use crate::world::{bumper_gap, Lane, Vehicle, World};

const CRUISE_SPEED: f64 = 30.0;
const RAMP_CRUISE_SPEED: f64 = 22.0;
const MIN_YIELD_SPEED: f64 = 12.0;
const CLOSE_HEADWAY: f64 = 0.8;
const OPEN_HEADWAY: f64 = 2.0;
// highway vehicles yield to ramp vehicles in this window around them (m)
const YIELD_BEHIND: f64 = 5.0;
const YIELD_AHEAD: f64 = 30.0;
const YIELD_APPROACH: f64 = 60.0;

/// Scripted merging behaviour.
///
/// Ramp vehicles ask to merge as soon as the lateral gate would allow it and
/// otherwise adjust speed to open a slot: they pass a vehicle that blocks
/// from behind and drop back behind one that blocks ahead, and fall back
/// once half the acceleration lane is used up. Highway vehicles keep a
/// comfortable headway and ease off near the merge section while a ramp
/// vehicle is alongside or just ahead. A vehicle in a lane change keeps
/// enough speed to steer.
pub fn heuristic_policy(world: &World, ego: &Vehicle) -> BehaviorAction {
    if ego.is_changing() {
        return if ego.speed() < MIN_YIELD_SPEED {
            BehaviorAction::SpeedUp
        } else {
            BehaviorAction::FollowLane
        };
    }
    match ego.lane {
        Lane::Ramp => ramp_rule(world, ego),
        Lane::Highway => highway_rule(world, ego),
    }
}

fn headway(world: &World, ego: &Vehicle) -> f64 {
    match world.neighbors(ego).leader {
        Some(l) => bumper_gap(ego, l) / ego.speed().max(1.0),
        None => f64::INFINITY,
    }
}

fn ramp_rule(world: &World, ego: &Vehicle) -> BehaviorAction {
    let road = &world.road;
    let v = ego.speed();
    if headway(world, ego) < CLOSE_HEADWAY {
        return BehaviorAction::SlowDown;
    }
    if road.lane_change_target(ego.lane, ego.state.x, true).is_none() {
        return if v < RAMP_CRUISE_SPEED {
            BehaviorAction::SpeedUp
        } else {
            BehaviorAction::FollowLane
        };
    }

    let cfg = &world.shield;
    let dt = world.scenario.dt;
    let me = Kin::of(ego);
    let nb = world.neighbors(ego);
    let lead = nb.adjacent_leader.map(|v| Leader::worst_case(Kin::of(v), cfg, dt));
    let rear = nb.adjacent_rear.map(Kin::of);
    if allow_lane_change(&me, lead.as_ref(), rear.as_ref(), cfg, dt) {
        return BehaviorAction::LaneLeft;
    }
    if ego.x_m > 0.5 * road.merge_length {
        return BehaviorAction::SlowDown;
    }
    let rear_blocks =
        rear.is_some() && !allow_lane_change(&me, None, rear.as_ref(), cfg, dt);
    if rear_blocks && v < ego.params.v_cap - 1.0 {
        BehaviorAction::SpeedUp
    } else {
        BehaviorAction::SlowDown
    }
}

fn highway_rule(world: &World, ego: &Vehicle) -> BehaviorAction {
    let road = &world.road;
    let v = ego.speed();
    let h = headway(world, ego);
    if h < CLOSE_HEADWAY {
        return BehaviorAction::SlowDown;
    }
    let x = ego.state.x;
    let near_merge = x >= road.merge_start - YIELD_APPROACH && x <= road.merge_end();
    if near_merge && v > MIN_YIELD_SPEED {
        let ramp_alongside = world.visible(ego).any(|o| {
            o.lane == Lane::Ramp && o.is_live() && {
                let dx = o.state.x - x;
                (-YIELD_BEHIND..=YIELD_AHEAD).contains(&dx)
            }
        });
        if ramp_alongside {
            return BehaviorAction::SlowDown;
        }
    }
    if h > OPEN_HEADWAY && v < CRUISE_SPEED {
        BehaviorAction::SpeedUp
    } else {
        BehaviorAction::FollowLane
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicPolicy;

impl Policy for HeuristicPolicy {
    fn act(&mut self, ctx: &StepContext<'_>) -> Result<ActionMap, ProtocolError> {
        Ok(ctx
            .world
            .live()
            .map(|v| (v.id, heuristic_policy(ctx.world, v)))
            .collect())
    }
}
