//! Run configuration, read from TOML.
//!
//! ```toml
//! [scenario]          # fleet, timing, spawn and tracking settings
//! n_vehicles = 9
//! [road]              # lane width, ramp and merge section geometry
//! [shield]            # mode = "none" | "hss" | "mass", tau, eta, k_eps, ...
//! [reward]            # kind = "default" | "custom", [reward.weights]
//! [policy]            # kind = "random" | "heuristic" | "external:CMD"
//! [run]               # episodes, seed, output_dir, emit_trajectories
//! ```
//!
//! Every key is optional; missing keys take their defaults. Unknown keys
//! are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::policy::PolicySpec;
use crate::reward::RewardConfig;
use crate::shield::ShieldConfig;
use crate::world::{RoadNetwork, ScenarioConfig, REFERENCE_FLEET};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSettings {
    pub episodes: usize,
    /// Seed of the first episode; episode `k` uses `seed + k`.
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    /// Write one JSON-lines record per episode.
    pub emit_trajectories: bool,
    /// Run fleets outside the reference 7-11 range.
    pub allow_out_of_range: bool,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            episodes: 1,
            seed: 0,
            output_dir: None,
            emit_trajectories: false,
            allow_out_of_range: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub road: RoadNetwork,
    pub shield: ShieldConfig,
    pub reward: RewardConfig,
    pub policy: PolicySpec,
    pub run: RunSettings,
}

/// Problems found by [`RunConfig::check`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub errors: Vec<ConfigError>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(describe_toml_error(text, &e)))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
            .map_err(|e| match e {
                ConfigError::Parse(m) => ConfigError::Parse(format!("{}: {m}", path.display())),
                other => other,
            })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration is always representable in TOML")
    }

    /// Collects every invariant violation plus advisory warnings.
    pub fn check(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let checks = [
            self.scenario.validate(),
            self.road.validate(),
            self.shield.validate(),
            self.reward.weights.validate(),
        ];
        report.errors.extend(checks.into_iter().filter_map(Result::err));
        if self.run.episodes == 0 {
            report
                .errors
                .push(ConfigError::invalid("run.episodes", "must be >= 1"));
        }
        if !(self.policy.timeout_s > 0.0) {
            report
                .errors
                .push(ConfigError::invalid("policy.timeout_s", "must be > 0"));
        }
        if self.scenario.outside_reference_fleet() {
            report.warnings.push(format!(
                "n_vehicles = {} lies outside the reference range {}-{}",
                self.scenario.n_vehicles,
                REFERENCE_FLEET.start(),
                REFERENCE_FLEET.end()
            ));
            if !self.run.allow_out_of_range {
                report.errors.push(ConfigError::invalid(
                    "scenario.n_vehicles",
                    "outside the reference range; pass --allow-out-of-range to run anyway",
                ));
            }
        }
        if self.reward.weights.tau != self.shield.tau {
            report.warnings.push(format!(
                "reward.weights.tau = {} differs from shield.tau = {}",
                self.reward.weights.tau, self.shield.tau
            ));
        }
        if self.reward.weights.merge_length != self.road.merge_length {
            report.warnings.push(format!(
                "reward.weights.merge_length = {} differs from road.merge_length = {}",
                self.reward.weights.merge_length, self.road.merge_length
            ));
        }
        report
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self.check().errors.into_iter().next() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

fn describe_toml_error(text: &str, e: &toml::de::Error) -> String {
    let message = e.message().trim().to_string();
    let Some(span) = e.span() else {
        return message;
    };
    let before = &text[..span.start.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    let source = text.lines().nth(line - 1).unwrap_or("");
    format!("line {line}, column {col}: {message}\n  | {source}")
}
