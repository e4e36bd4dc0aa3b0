//! Behavioural action space, built-in test policies and the bridge to
//! external decision-makers.

mod external;
mod heuristic;
pub mod protocol;
mod random;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use external::{ChildTransport, ExternalPolicy, Transport};
pub use heuristic::{heuristic_policy, HeuristicPolicy};
pub use random::{random_action, RandomPolicy};

use crate::error::ProtocolError;
use crate::metrics::EpisodeSummary;
use crate::world::{VehicleId, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BehaviorAction {
    LaneLeft,
    LaneRight,
    FollowLane,
    SpeedUp,
    SlowDown,
}

impl BehaviorAction {
    /// All actions in wire order.
    pub const ALL: [BehaviorAction; 5] = [
        BehaviorAction::LaneLeft,
        BehaviorAction::LaneRight,
        BehaviorAction::FollowLane,
        BehaviorAction::SpeedUp,
        BehaviorAction::SlowDown,
    ];

    pub fn wire_id(self) -> u8 {
        self as u8
    }

    pub fn from_wire_id(id: u64) -> Option<Self> {
        Self::ALL.get(usize::try_from(id).ok()?).copied()
    }
}

/// Serialized as `random`, `heuristic` or `external:CMD`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PolicyKind {
    Random,
    Heuristic,
    /// Shell command of a child process speaking the line protocol.
    External(String),
}

impl std::str::FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(PolicyKind::Random),
            "heuristic" => Ok(PolicyKind::Heuristic),
            _ => match s.strip_prefix("external:") {
                Some(cmd) if !cmd.trim().is_empty() => Ok(PolicyKind::External(cmd.to_string())),
                Some(_) => Err("external policy needs a command: external:CMD".to_string()),
                None => Err(format!(
                    "unknown policy `{s}` (random|heuristic|external:CMD)"
                )),
            },
        }
    }
}

impl TryFrom<String> for PolicyKind {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<PolicyKind> for String {
    fn from(k: PolicyKind) -> String {
        k.to_string()
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PolicyKind::Random => f.write_str("random"),
            PolicyKind::Heuristic => f.write_str("heuristic"),
            PolicyKind::External(cmd) => write!(f, "external:{cmd}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    /// Seed of the random policy; the episode seed when absent.
    pub seed: Option<u64>,
    /// Response timeout of an external policy (s).
    pub timeout_s: f64,
}

impl Default for PolicySpec {
    fn default() -> Self {
        Self {
            kind: PolicyKind::Heuristic,
            seed: None,
            timeout_s: 10.0,
        }
    }
}

/// What a policy sees at the start of a step.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    pub world: &'a World,
    pub step: u64,
    /// Rewards earned on the previous step (empty on the first).
    pub rewards: &'a BTreeMap<VehicleId, f64>,
}

pub type ActionMap = BTreeMap<VehicleId, BehaviorAction>;

/// A joint decision maker: one action per live vehicle and step.
pub trait Policy {
    fn begin(&mut self, _world: &World, _seed: u64) -> Result<(), ProtocolError> {
        Ok(())
    }

    fn act(&mut self, ctx: &StepContext<'_>) -> Result<ActionMap, ProtocolError>;

    fn end(&mut self, _summary: &EpisodeSummary) -> Result<(), ProtocolError> {
        Ok(())
    }

    /// Protocol warnings raised so far (invalid or missing actions).
    fn warnings(&self) -> u64 {
        0
    }
}
