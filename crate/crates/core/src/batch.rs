//! Batches of episodes over consecutive seeds, and their file outputs.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::episode::run_episode;
use crate::error::{RecordError, RunError};
use crate::metrics::{aggregate, headway_threshold, BatchAggregate, EpisodeSummary};
use crate::record::write_atomic;
use crate::reward::RewardKind;
use crate::shield::ShieldMode;

pub const SUMMARY_CSV: &str = "summaries.csv";
pub const AGGREGATE_JSON: &str = "aggregate.json";
pub const EPISODE_DIR: &str = "episodes";
pub const AGGREGATE_SCHEMA: &str = "mergeshield.aggregate/1";
pub const SUMMARY_SCHEMA: &str = "mergeshield.summaries/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub schema: String,
    pub shield: ShieldMode,
    pub policy: String,
    pub first_seed: u64,
    /// Headway below which an episode counts as a violation (s).
    pub headway_threshold: f64,
    pub aggregate: BatchAggregate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutcome {
    pub summaries: Vec<EpisodeSummary>,
    pub report: BatchReport,
}

impl BatchOutcome {
    /// Safety violations that count against the run: any under an active shield.
    pub fn shield_violations(&self) -> usize {
        match self.report.shield {
            ShieldMode::None => 0,
            _ => self.report.aggregate.violations,
        }
    }
}

pub fn episode_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(EPISODE_DIR).join(format!("episode_{seed}.jsonl"))
}

/// Runs `cfg.run.episodes` episodes with seeds `seed, seed + 1, ...`,
/// concurrently, and writes the outputs if an output directory is set.
pub fn run_batch(cfg: &RunConfig) -> Result<BatchOutcome, RunError> {
    cfg.validate()?;
    let out_dir = cfg.run.output_dir.as_deref();
    if let Some(dir) = out_dir {
        let sub = if cfg.run.emit_trajectories {
            dir.join(EPISODE_DIR)
        } else {
            dir.to_path_buf()
        };
        fs::create_dir_all(&sub).map_err(|source| RunError::Output { path: sub, source })?;
    }

    let first = cfg.run.seed;
    let summaries = (0..cfg.run.episodes as u64)
        .into_par_iter()
        .map(|k| -> Result<EpisodeSummary, RunError> {
            let seed = first + k;
            let record = run_episode(cfg, seed)?;
            if let (Some(dir), true) = (out_dir, cfg.run.emit_trajectories) {
                record.save(&episode_path(dir, seed))?;
            }
            log::info!(
                "episode {seed}: min headway {:.3} s, {} collisions",
                record.summary.min_headway,
                record.summary.collisions
            );
            Ok(record.summary)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let threshold = headway_threshold(cfg.shield.tau);
    let report = BatchReport {
        schema: AGGREGATE_SCHEMA.to_string(),
        shield: cfg.shield.mode,
        policy: cfg.policy.kind.to_string(),
        first_seed: first,
        headway_threshold: threshold,
        aggregate: aggregate(&summaries, threshold),
    };
    if let Some(dir) = out_dir {
        write_outputs(dir, &summaries, &report)?;
    }
    Ok(BatchOutcome { summaries, report })
}

fn write_outputs(dir: &Path, summaries: &[EpisodeSummary], report: &BatchReport) -> Result<(), RunError> {
    let csv_path = dir.join(SUMMARY_CSV);
    let csv = summaries_to_csv(summaries);
    write_atomic(&csv_path, csv.as_bytes()).map_err(|source| RunError::Output {
        path: csv_path,
        source,
    })?;
    let json_path = dir.join(AGGREGATE_JSON);
    let mut json = serde_json::to_string_pretty(report).expect("report is serializable");
    json.push('\n');
    write_atomic(&json_path, json.as_bytes()).map_err(|source| RunError::Output {
        path: json_path,
        source,
    })
}

/// Flat CSV row; empty cells stand for "no interaction" / "no ramp spawns".
#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    seed: u64,
    shield: ShieldMode,
    policy: String,
    reward: RewardKind,
    n_vehicles: usize,
    steps: u64,
    min_headway: Option<f64>,
    avg_speed: f64,
    ramp_spawned: usize,
    merged: usize,
    merging_pct: Option<f64>,
    collisions: usize,
    shield_faults: usize,
    protocol_warnings: u64,
    mean_reward: f64,
}

impl From<&EpisodeSummary> for CsvRow {
    fn from(s: &EpisodeSummary) -> Self {
        Self {
            seed: s.seed,
            shield: s.shield,
            policy: s.policy.clone(),
            reward: s.reward,
            n_vehicles: s.n_vehicles,
            steps: s.steps,
            min_headway: s.min_headway.is_finite().then_some(s.min_headway),
            avg_speed: s.avg_speed,
            ramp_spawned: s.ramp_spawned,
            merged: s.merged,
            merging_pct: s.merging_pct,
            collisions: s.collisions,
            shield_faults: s.shield_faults,
            protocol_warnings: s.protocol_warnings,
            mean_reward: s.mean_reward,
        }
    }
}

impl From<CsvRow> for EpisodeSummary {
    fn from(r: CsvRow) -> Self {
        Self {
            seed: r.seed,
            shield: r.shield,
            policy: r.policy,
            reward: r.reward,
            n_vehicles: r.n_vehicles,
            steps: r.steps,
            min_headway: r.min_headway.unwrap_or(f64::INFINITY),
            avg_speed: r.avg_speed,
            ramp_spawned: r.ramp_spawned,
            merged: r.merged,
            merging_pct: r.merging_pct,
            collisions: r.collisions,
            shield_faults: r.shield_faults,
            protocol_warnings: r.protocol_warnings,
            mean_reward: r.mean_reward,
        }
    }
}

/// CSV text with a leading `# schema: ...` comment line.
pub fn summaries_to_csv(summaries: &[EpisodeSummary]) -> String {
    let mut w = csv::Writer::from_writer(format!("# schema: {SUMMARY_SCHEMA}\n").into_bytes());
    for s in summaries {
        w.serialize(CsvRow::from(s)).expect("in-memory CSV write");
    }
    String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV is UTF-8")
}

pub fn summaries_from_csv(text: &str) -> Result<Vec<EpisodeSummary>, RecordError> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    r.deserialize::<CsvRow>()
        .enumerate()
        .map(|(i, row)| {
            row.map(EpisodeSummary::from).map_err(|e| RecordError::Parse {
                line: i + 3,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn load_summaries(path: &Path) -> Result<Vec<EpisodeSummary>, RecordError> {
    let text = fs::read_to_string(path).map_err(|source| RecordError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    summaries_from_csv(&text)
}
