//! Episode records: one JSON object per line, a header, one line per step
//! and a closing summary.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::VehicleState;
use crate::error::RecordError;
use crate::metrics::EpisodeSummary;
use crate::policy::BehaviorAction;
use crate::reward::RewardConfig;
use crate::shield::{ShieldConfig, ShieldOutcome};
use crate::topology::InteractionTopology;
use crate::world::{Lane, RoadNetwork, ScenarioConfig, Vehicle, VehicleId};

pub const EPISODE_SCHEMA: &str = "mergeshield.episode/1";

/// The per-vehicle state kept in records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleSnapshot {
    pub id: VehicleId,
    pub lane: Lane,
    pub target_lane: Lane,
    pub spawn_lane: Lane,
    pub state: VehicleState,
    pub length: f64,
    pub width: f64,
    pub x_m: f64,
    pub merged: bool,
    pub crashed: bool,
    pub failed_merge: bool,
}

impl VehicleSnapshot {
    pub fn of(v: &Vehicle) -> Self {
        Self {
            id: v.id,
            lane: v.lane,
            target_lane: v.target_lane,
            spawn_lane: v.spawn_lane,
            state: v.state,
            length: v.params.length,
            width: v.params.width,
            x_m: v.x_m,
            merged: v.merged,
            crashed: v.crashed,
            failed_merge: v.failed_merge,
        }
    }

    pub fn on_road(&self) -> bool {
        !self.failed_merge
    }

    pub fn is_live(&self) -> bool {
        !self.failed_merge && !self.crashed
    }

    pub fn speed(&self) -> f64 {
        self.state.speed()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeHeader {
    pub schema: String,
    pub seed: u64,
    pub policy: String,
    pub scenario: ScenarioConfig,
    pub shield: ShieldConfig,
    pub reward: RewardConfig,
    pub road: RoadNetwork,
    pub initial: Vec<VehicleSnapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub actions: BTreeMap<VehicleId, BehaviorAction>,
    pub outcomes: BTreeMap<VehicleId, ShieldOutcome>,
    /// Neighbourhood-averaged rewards after the step.
    pub rewards: BTreeMap<VehicleId, f64>,
    pub topology: InteractionTopology,
    pub collisions: Vec<(VehicleId, VehicleId)>,
    pub merged: Vec<VehicleId>,
    pub failed_merges: Vec<VehicleId>,
    /// Post-step vehicle states.
    pub vehicles: Vec<VehicleSnapshot>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub header: EpisodeHeader,
    pub steps: Vec<StepRecord>,
    pub summary: EpisodeSummary,
}

#[derive(Deserialize)]
struct Tag {
    record: String,
}

#[derive(Serialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum LineRef<'a> {
    Header(&'a EpisodeHeader),
    Step(&'a StepRecord),
    Summary(&'a EpisodeSummary),
}

fn to_line(line: LineRef<'_>) -> String {
    serde_json::to_string(&line).expect("records contain only serializable data")
}

impl EpisodeRecord {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        out.push_str(&to_line(LineRef::Header(&self.header)));
        out.push('\n');
        for s in &self.steps {
            out.push_str(&to_line(LineRef::Step(s)));
            out.push('\n');
        }
        out.push_str(&to_line(LineRef::Summary(&self.summary)));
        out.push('\n');
        out
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(self.to_jsonl().as_bytes())
    }

    pub fn from_reader<R: BufRead>(r: R) -> Result<Self, RecordError> {
        let mut header = None;
        let mut steps = Vec::new();
        let mut summary = None;
        for (i, line) in r.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| RecordError::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |e: serde_json::Error| RecordError::Parse {
                line: line_no,
                message: e.to_string(),
            };
            // the body is parsed straight from text so that integer map keys work
            let tag: Tag = serde_json::from_str(&line).map_err(parse_err)?;
            match tag.record.as_str() {
                "header" => {
                    let h: EpisodeHeader = serde_json::from_str(&line).map_err(parse_err)?;
                    if h.schema != EPISODE_SCHEMA {
                        return Err(RecordError::Schema(h.schema));
                    }
                    header = Some(h);
                }
                "step" => steps.push(serde_json::from_str(&line).map_err(parse_err)?),
                "summary" => summary = Some(serde_json::from_str(&line).map_err(parse_err)?),
                other => {
                    return Err(RecordError::Parse {
                        line: line_no,
                        message: format!("unknown record kind `{other}`"),
                    })
                }
            }
        }
        match (header, summary) {
            (Some(header), Some(summary)) => Ok(Self {
                header,
                steps,
                summary,
            }),
            _ => Err(RecordError::Empty),
        }
    }

    pub fn load(path: &Path) -> Result<Self, RecordError> {
        let f = fs::File::open(path).map_err(|source| RecordError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_reader(BufReader::new(f))
    }

    pub fn save(&self, path: &Path) -> Result<(), RecordError> {
        write_atomic(path, self.to_jsonl().as_bytes()).map_err(|source| RecordError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Vehicle snapshots at the start and after every step.
    pub fn snapshots(&self) -> impl Iterator<Item = &[VehicleSnapshot]> {
        std::iter::once(self.header.initial.as_slice())
            .chain(self.steps.iter().map(|s| s.vehicles.as_slice()))
    }
}

/// Writes through a temporary sibling file and renames it into place.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}
