//! One simulated episode: spawn, lock-step policy and simulation, record.

use std::collections::BTreeMap;
use std::time::Duration;

use crate::config::RunConfig;
use crate::error::RunError;
use crate::metrics::summarize;
use crate::policy::{
    ChildTransport, ExternalPolicy, HeuristicPolicy, Policy, PolicyKind, PolicySpec, RandomPolicy,
    StepContext,
};
use crate::record::{EpisodeHeader, EpisodeRecord, StepRecord, VehicleSnapshot, EPISODE_SCHEMA};
use crate::reward::fleet_rewards;
use crate::world::{ScenarioConfig, World};

/// Instantiates the policy described by `spec`; external policies start their process here.
pub fn make_policy(spec: &PolicySpec) -> Result<Box<dyn Policy>, RunError> {
    Ok(match &spec.kind {
        PolicyKind::Random => Box::new(RandomPolicy::new(spec.seed)),
        PolicyKind::Heuristic => Box::new(HeuristicPolicy),
        PolicyKind::External(cmd) => {
            let timeout = Duration::from_secs_f64(spec.timeout_s);
            Box::new(ExternalPolicy::new(ChildTransport::spawn(cmd, timeout)?))
        }
    })
}

/// Runs the episode with seed `seed` under the policy named in `cfg`.
pub fn run_episode(cfg: &RunConfig, seed: u64) -> Result<EpisodeRecord, RunError> {
    let mut policy = make_policy(&cfg.policy)?;
    run_episode_with(cfg, seed, policy.as_mut())
}

/// Runs the episode with seed `seed` under an already constructed policy.
pub fn run_episode_with(
    cfg: &RunConfig,
    seed: u64,
    policy: &mut dyn Policy,
) -> Result<EpisodeRecord, RunError> {
    let scenario = ScenarioConfig {
        rng_seed: seed,
        ..cfg.scenario.clone()
    };
    let mut world = World::spawn(cfg.road.clone(), scenario, cfg.shield.clone())?;
    let header = EpisodeHeader {
        schema: EPISODE_SCHEMA.to_string(),
        seed,
        policy: cfg.policy.kind.to_string(),
        scenario: world.scenario.clone(),
        shield: world.shield.clone(),
        reward: cfg.reward,
        road: world.road.clone(),
        initial: world.vehicles.iter().map(VehicleSnapshot::of).collect(),
    };

    policy.begin(&world, seed)?;
    let mut rewards = BTreeMap::new();
    let mut steps = Vec::with_capacity(world.scenario.episode_steps as usize);
    for k in 0..world.scenario.episode_steps {
        if world.live().next().is_none() {
            break;
        }
        let ctx = StepContext {
            world: &world,
            step: k,
            rewards: &rewards,
        };
        let actions = policy.act(&ctx)?;
        let report = world.step(&actions)?;
        rewards = fleet_rewards(&world, &cfg.reward);
        let applied = report
            .plans
            .keys()
            .map(|id| (*id, world.vehicle(*id).expect("planned vehicle exists").behavior))
            .collect();
        steps.push(StepRecord {
            step: k,
            actions: applied,
            outcomes: report.outcomes,
            rewards: rewards.clone(),
            topology: report.topology,
            collisions: report.collisions,
            merged: report.merged,
            failed_merges: report.failed_merges,
            vehicles: world.vehicles.iter().map(VehicleSnapshot::of).collect(),
        });
    }

    let summary = summarize(&header, &steps, policy.warnings())?;
    policy.end(&summary)?;
    Ok(EpisodeRecord {
        header,
        steps,
        summary,
    })
}
