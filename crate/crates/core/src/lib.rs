//! Safety-shielded multi-agent merging simulation.
//!
//! Connected vehicles on a highway with an on-ramp choose discrete
//! behavioural actions; a control-barrier-function shield filters each
//! vehicle's speed command, either against worst-case neighbours or, in
//! the collaborative mode, against the already-filtered commands of the
//! vehicles it depends on.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod batch;
pub mod config;
pub mod dynamics;
pub mod episode;
pub mod error;
pub mod metrics;
pub mod policy;
pub mod record;
pub mod reward;
pub mod shield;
pub mod topology;
pub mod world;

pub use batch::{run_batch, BatchOutcome, BatchReport};
pub use config::{RunConfig, RunSettings, ValidationReport};
pub use dynamics::{ControlInput, VehicleParams, VehicleState};
pub use episode::{make_policy, run_episode, run_episode_with};
pub use error::{ConfigError, MetricError, ProtocolError, QpError, RecordError, RunError, TopologyError};
pub use metrics::{EpisodeSummary, MeanSe};
pub use policy::{BehaviorAction, Policy, PolicyKind, PolicySpec};
pub use record::EpisodeRecord;
pub use reward::{RewardConfig, RewardKind, RewardWeights};
pub use shield::{ShieldConfig, ShieldMode, ShieldOutcome};
pub use topology::{build_topology, evaluation_order, InteractionTopology};
pub use world::{Lane, RoadNetwork, ScenarioConfig, Vehicle, VehicleId, World};
