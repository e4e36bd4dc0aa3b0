//! Lock-step line protocol between the simulator and an external policy.
//!
//! Every message is one JSON object on one line, tagged by `type`.
//!
//! ```text
//! sim    -> policy  {"type":"hello","protocol":1,"seed":..,"scenario":{..},"shield":"mass","actions":[..]}
//! policy -> sim     {"type":"hello_ack","protocol":1}
//! sim    -> policy  {"type":"step","step":k,"agents":[{"id":0,"observation":[[..]],"reward":..,"done":false},..]}
//! policy -> sim     {"type":"actions","step":k,"actions":[{"id":0,"action":2},..]}
//! sim    -> policy  {"type":"episode_end","summary":{..}}
//! ```
//!
//! Action ids are `0 lane_left, 1 lane_right, 2 follow_lane, 3 speed_up,
//! 4 slow_down`. Numbers are written in shortest round-trip form, so values
//! survive the trip exactly.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{ActionMap, BehaviorAction};
use crate::error::ProtocolError;
use crate::metrics::EpisodeSummary;
use crate::shield::ShieldMode;
use crate::world::{ScenarioConfig, VehicleId};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Request {
    Hello {
        protocol: u32,
        seed: u64,
        scenario: ScenarioConfig,
        shield: ShieldMode,
        /// Action names in wire order.
        actions: Vec<BehaviorAction>,
    },
    Step {
        step: u64,
        agents: Vec<AgentState>,
    },
    EpisodeEnd {
        summary: EpisodeSummary,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: VehicleId,
    pub observation: Vec<[f64; 5]>,
    pub reward: f64,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Response {
    HelloAck { protocol: u32 },
    Actions { step: u64, actions: Vec<AgentAction> },
}

/// One agent's answer. The action is kept raw so that invalid ids can be
/// detected and replaced instead of failing the whole message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentAction {
    pub id: VehicleId,
    pub action: serde_json::Value,
}

impl AgentAction {
    pub fn new(id: VehicleId, action: BehaviorAction) -> Self {
        Self {
            id,
            action: serde_json::Value::from(action.wire_id()),
        }
    }
}

pub fn encode<T: Serialize>(msg: &T) -> Result<String, ProtocolError> {
    serde_json::to_string(msg).map_err(|e| ProtocolError::Malformed(e.to_string()))
}

pub fn decode<T: for<'de> Deserialize<'de>>(line: &str) -> Result<T, ProtocolError> {
    serde_json::from_str(line.trim()).map_err(|e| ProtocolError::Malformed(e.to_string()))
}

/// Maps a response onto the vehicles that need an action. Unknown, invalid
/// or missing entries become `follow_lane`; the second value counts them.
pub fn resolve_actions(
    live: impl IntoIterator<Item = VehicleId>,
    actions: &[AgentAction],
) -> (ActionMap, u64) {
    let mut warnings = 0;
    let mut out = ActionMap::new();
    for id in live {
        let chosen = actions
            .iter()
            .find(|a| a.id == id)
            .and_then(|a| a.action.as_u64())
            .and_then(BehaviorAction::from_wire_id);
        match chosen {
            Some(a) => {
                out.insert(id, a);
            }
            None => {
                warnings += 1;
                log::warn!("no valid action for vehicle {id}, using follow_lane");
                out.insert(id, BehaviorAction::FollowLane);
            }
        }
    }
    (out, warnings)
}

/// Runs a responder loop: answers every request read from `input` with
/// `handler`'s response (if any) until end of input.
pub fn serve<R: BufRead, W: Write>(
    input: R,
    mut output: W,
    mut handler: impl FnMut(&Request) -> Option<Response>,
) -> Result<(), ProtocolError> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let request: Request = decode(&line)?;
        if let Some(response) = handler(&request) {
            writeln!(output, "{}", encode(&response)?)?;
            output.flush()?;
        }
    }
    Ok(())
}

/// Answers the handshake and maps every step through `decide`.
pub fn responder(
    mut decide: impl FnMut(u64, &[AgentState]) -> Vec<AgentAction>,
) -> impl FnMut(&Request) -> Option<Response> {
    move |req| match req {
        Request::Hello { .. } => Some(Response::HelloAck {
            protocol: PROTOCOL_VERSION,
        }),
        Request::Step { step, agents } => Some(Response::Actions {
            step: *step,
            actions: decide(*step, agents),
        }),
        Request::EpisodeEnd { .. } => None,
    }
}
