//! Evaluation metrics computed from episode records, and batch aggregates.

use serde::{Deserialize, Serialize};

use crate::error::MetricError;
use crate::record::{EpisodeHeader, EpisodeRecord, StepRecord, VehicleSnapshot};
use crate::reward::RewardKind;
use crate::shield::ShieldMode;
use crate::world::{Lane, OrderedX, RoadNetwork};

/// Followers slower than this are left out of the headway minimum.
pub const V_FLOOR: f64 = 1.0;

/// Allowance below `tau` for the one-step discretisation of the headway
/// check (s).
pub const HEADWAY_SLACK: f64 = 0.05;

/// Headway below which an episode counts as a safety violation.
pub fn headway_threshold(tau: f64) -> f64 {
    tau - HEADWAY_SLACK
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub seed: u64,
    pub shield: ShieldMode,
    pub policy: String,
    pub reward: RewardKind,
    pub n_vehicles: usize,
    pub steps: u64,
    /// Seconds; infinite when no pair ever interacted (written as null).
    #[serde(with = "infinite_as_null")]
    pub min_headway: f64,
    pub avg_speed: f64,
    pub ramp_spawned: usize,
    pub merged: usize,
    /// Absent when no vehicle started on the ramp.
    pub merging_pct: Option<f64>,
    pub collisions: usize,
    pub shield_faults: usize,
    pub protocol_warnings: u64,
    pub mean_reward: f64,
}

impl EpisodeSummary {
    /// A collision, or a headway below `threshold`.
    pub fn violates(&self, threshold: f64) -> bool {
        self.collisions > 0 || self.min_headway < threshold
    }
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Smallest same-lane time headway in one snapshot: bumper gap to the
/// nearest vehicle ahead in the same dominant lane, divided by the
/// follower's speed. Overlapping vehicles count as zero.
pub fn snapshot_min_headway(road: &RoadNetwork, vehicles: &[VehicleSnapshot]) -> f64 {
    let on_road: Vec<&VehicleSnapshot> = vehicles.iter().filter(|v| v.on_road()).collect();
    let lane = |v: &VehicleSnapshot| road.dominant_lane(v.state.y);
    let key = |v: &VehicleSnapshot| (std::cmp::Reverse(OrderedX(v.state.x)), v.id);
    let mut min = f64::INFINITY;
    for f in &on_road {
        if f.crashed {
            continue;
        }
        let v = f.speed();
        if v < V_FLOOR {
            continue;
        }
        let leader = on_road
            .iter()
            .filter(|l| l.id != f.id && lane(l) == lane(f) && key(l) < key(f))
            .max_by_key(|l| key(l));
        if let Some(l) = leader {
            let gap = (l.state.x - 0.5 * l.length) - (f.state.x + 0.5 * f.length);
            min = min.min((gap / v).max(0.0));
        }
    }
    min
}

/// Minimum time headway over the whole episode; zero if anything collided.
pub fn min_time_headway(record: &EpisodeRecord) -> f64 {
    min_headway_of(&record.header, &record.steps)
}

fn min_headway_of(header: &EpisodeHeader, steps: &[StepRecord]) -> f64 {
    if steps.iter().any(|s| !s.collisions.is_empty()) {
        return 0.0;
    }
    std::iter::once(header.initial.as_slice())
        .chain(steps.iter().map(|s| s.vehicles.as_slice()))
        .map(|s| snapshot_min_headway(&header.road, s))
        .fold(f64::INFINITY, f64::min)
}

/// Mean speed over every live vehicle after every step.
pub fn average_speed(record: &EpisodeRecord) -> Result<f64, MetricError> {
    average_speed_of(&record.steps)
}

fn average_speed_of(steps: &[StepRecord]) -> Result<f64, MetricError> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for step in steps {
        for v in step.vehicles.iter().filter(|v| v.is_live()) {
            sum += v.speed();
            n += 1;
        }
    }
    if n == 0 {
        return Err(MetricError::EmptyRecord);
    }
    Ok(sum / n as f64)
}

/// (ramp vehicles spawned, ramp vehicles merged) in one record.
pub fn merge_counts(record: &EpisodeRecord) -> (usize, usize) {
    merge_counts_of(&record.header, &record.steps)
}

fn merge_counts_of(header: &EpisodeHeader, steps: &[StepRecord]) -> (usize, usize) {
    let spawned = header
        .initial
        .iter()
        .filter(|v| v.spawn_lane == Lane::Ramp)
        .count();
    let last = steps
        .last()
        .map_or(header.initial.as_slice(), |s| s.vehicles.as_slice());
    let merged = last
        .iter()
        .filter(|v| v.spawn_lane == Lane::Ramp && v.merged)
        .count();
    (spawned, merged)
}

/// Share of ramp-spawned vehicles that merged, pooled over `records`.
pub fn merging_percentage<'a>(
    records: impl IntoIterator<Item = &'a EpisodeRecord>,
) -> Result<f64, MetricError> {
    let (spawned, merged) = records
        .into_iter()
        .map(merge_counts)
        .fold((0, 0), |(s, m), (s1, m1)| (s + s1, m + m1));
    pooled_percentage(spawned, merged)
}

fn pooled_percentage(spawned: usize, merged: usize) -> Result<f64, MetricError> {
    if spawned == 0 {
        return Err(MetricError::NoRampSpawns);
    }
    Ok(100.0 * merged as f64 / spawned as f64)
}

/// Summary of an episode from its header and steps.
pub fn summarize(
    header: &EpisodeHeader,
    steps: &[StepRecord],
    protocol_warnings: u64,
) -> Result<EpisodeSummary, MetricError> {
    let (ramp_spawned, merged) = merge_counts_of(header, steps);
    let reward_samples: Vec<f64> = steps.iter().flat_map(|s| s.rewards.values().copied()).collect();
    let mean_reward = if reward_samples.is_empty() {
        0.0
    } else {
        reward_samples.iter().sum::<f64>() / reward_samples.len() as f64
    };
    Ok(EpisodeSummary {
        seed: header.seed,
        shield: header.shield.mode,
        policy: header.policy.clone(),
        reward: header.reward.kind,
        n_vehicles: header.initial.len(),
        steps: steps.len() as u64,
        min_headway: min_headway_of(header, steps),
        avg_speed: average_speed_of(steps)?,
        ramp_spawned,
        merged,
        merging_pct: pooled_percentage(ramp_spawned, merged).ok(),
        collisions: steps.iter().map(|s| s.collisions.len()).sum(),
        shield_faults: steps
            .iter()
            .flat_map(|s| s.outcomes.values())
            .filter(|o| o.fault)
            .count(),
        protocol_warnings,
        mean_reward,
    })
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl MeanSe {
    pub fn of(xs: &[f64]) -> Option<Self> {
        let n = xs.len();
        if n == 0 {
            return None;
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let se = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, se, n })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchAggregate {
    pub episodes: usize,
    /// Over episodes with at least one interacting pair.
    pub min_headway: Option<MeanSe>,
    /// Smallest headway of the batch, null when nothing interacted.
    #[serde(with = "infinite_as_null")]
    pub worst_headway: f64,
    pub avg_speed: Option<MeanSe>,
    /// Pooled over the batch.
    pub merging_pct: Option<f64>,
    pub collisions: usize,
    pub shield_faults: usize,
    pub violations: usize,
    pub protocol_warnings: u64,
}

/// Batch statistics; `threshold` is the headway below which an episode
/// counts as a safety violation.
pub fn aggregate(summaries: &[EpisodeSummary], threshold: f64) -> BatchAggregate {
    let headways: Vec<f64> = summaries
        .iter()
        .map(|s| s.min_headway)
        .filter(|h| h.is_finite())
        .collect();
    let speeds: Vec<f64> = summaries.iter().map(|s| s.avg_speed).collect();
    let spawned = summaries.iter().map(|s| s.ramp_spawned).sum();
    let merged = summaries.iter().map(|s| s.merged).sum();
    BatchAggregate {
        episodes: summaries.len(),
        min_headway: MeanSe::of(&headways),
        worst_headway: summaries
            .iter()
            .map(|s| s.min_headway)
            .fold(f64::INFINITY, f64::min),
        avg_speed: MeanSe::of(&speeds),
        merging_pct: pooled_percentage(spawned, merged).ok(),
        collisions: summaries.iter().map(|s| s.collisions).sum(),
        shield_faults: summaries.iter().map(|s| s.shield_faults).sum(),
        violations: summaries.iter().filter(|s| s.violates(threshold)).count(),
        protocol_warnings: summaries.iter().map(|s| s.protocol_warnings).sum(),
    }
}
