use std::path::PathBuf;

use thiserror::Error;

use crate::world::VehicleId;

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("{what} must be finite, got {value}")]
    NonFinite { what: &'static str, value: f64 },
}

/// Invalid scenario, shield, reward or run configuration.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("road geometry too short: {0}")]
    GeometryTooShort(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl ConfigError {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("hard constraints are infeasible")]
    Infeasible,
    #[error("constraint {index} has dimension {got}, expected {expected}")]
    Dimension {
        index: usize,
        got: usize,
        expected: usize,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("interaction topology contains a cycle through vehicle {0}")]
    Cycle(VehicleId),
    #[error("topology references unknown vehicle {0}")]
    UnknownVehicle(VehicleId),
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("external policy did not answer within {0:?}")]
    Timeout(std::time::Duration),
    #[error("external policy closed the connection")]
    Closed,
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("handshake failed: {0}")]
    Handshake(String),
    #[error("response for step {got} while waiting for step {expected}")]
    StepMismatch { expected: u64, got: u64 },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("record is empty")]
    Empty,
    #[error("unsupported schema `{0}`")]
    Schema(String),
}

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("no ramp vehicles were spawned, merging percentage is undefined")]
    NoRampSpawns,
    #[error("record contains no steps")]
    EmptyRecord,
}

/// Top-level error for episode and batch runs.
#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("cannot write output to {path}: {source}")]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
}
