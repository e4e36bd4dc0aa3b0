//! End-to-end acceptance checks. Each check prints one PASS/FAIL line; the
//! process exits non-zero if any check fails.

#[path = "acceptance/oracles.rs"]
mod oracles;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use mergeshield_core::batch::{run_batch, BatchOutcome, AGGREGATE_JSON, EPISODE_DIR, SUMMARY_CSV};
use mergeshield_core::metrics::headway_threshold;
use mergeshield_core::reward::{headway_reward, merge_reward, speed_reward, RewardWeights};
use mergeshield_core::shield::{joint_safe_control, kkt_residual, objective, solve_qp, AffineConstraint, ConstraintId};
use mergeshield_core::world::{ControlTarget, LaneChangePhase};
use mergeshield_core::{
    build_topology, evaluation_order, EpisodeRecord, Lane, PolicyKind, RoadNetwork, RunConfig,
    ScenarioConfig, ShieldConfig, ShieldMode, Vehicle, VehicleId, VehicleParams, VehicleState, World,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// tolerances and budgets
const HEADWAY_FLOOR: f64 = 0.45;
const SAFETY_BUDGET: Duration = Duration::from_secs(300);
const QP_INSTANCES: usize = 1000;
const QP_OBJECTIVE_TOL: f64 = 1e-6;
const QP_KKT_TOL: f64 = 1e-8;
const QP_GRID_SPACING: f64 = 1e-3;
const QP_GRID_REACH: i64 = 20;
const QP_BUDGET: Duration = Duration::from_secs(30);
const TOPOLOGY_SNAPSHOTS: usize = 10_000;
const TOPOLOGY_BUDGET: Duration = Duration::from_secs(30);
const PERMISSIVENESS_SCENES: u64 = 200;
const MERGE_EPISODES: usize = 100;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn batch(mode: ShieldMode, kind: PolicyKind, n_vehicles: usize, first_seed: u64, episodes: usize) -> BatchOutcome {
    let mut cfg = RunConfig::default();
    cfg.shield.mode = mode;
    cfg.policy.kind = kind;
    cfg.scenario.n_vehicles = n_vehicles;
    cfg.run.seed = first_seed;
    cfg.run.episodes = episodes;
    run_batch(&cfg).expect("batch runs")
}

/// Five seed blocks of 100 episodes, one per fleet size 7..=11.
fn safety_batches(mode: ShieldMode) -> Vec<BatchOutcome> {
    (0..5)
        .map(|i| batch(mode, PolicyKind::Random, 7 + i, 10_000 * i as u64, 100))
        .collect()
}

fn safety(mode: ShieldMode) -> Verdict {
    let t = Instant::now();
    let batches = safety_batches(mode);
    let elapsed = t.elapsed();
    let summaries: Vec<_> = batches.iter().flat_map(|b| &b.summaries).collect();
    let worst = summaries.iter().map(|s| s.min_headway).fold(f64::INFINITY, f64::min);
    let collisions: usize = summaries.iter().map(|s| s.collisions).sum();
    let faults: usize = summaries.iter().map(|s| s.shield_faults).sum();
    verdict(
        worst >= HEADWAY_FLOOR && collisions == 0 && elapsed <= SAFETY_BUDGET,
        format!(
            "{} episodes, worst min headway {worst:.3} s (floor {HEADWAY_FLOOR}), collisions {collisions}, shield faults {faults}, {:.1} s",
            summaries.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn unshielded_contrast() -> Verdict {
    let batches = safety_batches(ShieldMode::None);
    let threshold = headway_threshold(0.5);
    let summaries: Vec<_> = batches.iter().flat_map(|b| &b.summaries).collect();
    let violating = summaries.iter().filter(|s| s.violates(threshold)).count();
    let collisions: usize = summaries.iter().map(|s| s.collisions).sum();
    verdict(
        violating >= 1,
        format!(
            "{violating}/{} episodes below {threshold:.2} s or colliding, {collisions} collisions",
            summaries.len()
        ),
    )
}

fn random_qp(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<AffineConstraint>, f64) {
    let n = rng.gen_range(1..=3);
    let m = rng.gen_range(1..=6);
    let nominal: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..30.0)).collect();
    let anchor: Vec<f64> = nominal.iter().map(|v| v + rng.gen_range(-10.0..10.0)).collect();
    let k_eps = rng.gen_range(0.5..20.0);
    let rows = (0..m)
        .map(|i| {
            let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let at: f64 = a.iter().zip(&anchor).map(|(x, y)| x * y).sum();
            let id = ConstraintId::Row(i as u32);
            if rng.gen_bool(0.6) {
                AffineConstraint::hard(id, &a, at + rng.gen_range(0.05..3.0), 0.0)
            } else {
                AffineConstraint::soft(id, &a, at + rng.gen_range(-3.0..3.0), 0.0)
            }
        })
        .collect();
    (nominal, rows, k_eps)
}

fn qp_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e37);
    let t = Instant::now();
    let mut worst_obj: f64 = 0.0;
    let mut worst_kkt: f64 = 0.0;
    let mut worst_grid_gain = f64::NEG_INFINITY;
    let mut failures = 0;
    let mut active = 0;
    for _ in 0..QP_INSTANCES {
        let (nominal, rows, k_eps) = random_qp(&mut rng);
        let sol = match solve_qp(&nominal, &rows, k_eps) {
            Ok(s) => s,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        if !sol.active.is_empty() {
            active += 1;
        }
        let obj = objective(&sol.v, &nominal, sol.slack, k_eps);
        let Some(reference) = oracles::qp_exact_value(&nominal, &rows, k_eps) else {
            failures += 1;
            continue;
        };
        worst_obj = worst_obj.max((obj - reference).abs());
        let grid = oracles::qp_grid_minimum(&nominal, &rows, k_eps, &sol.v, QP_GRID_SPACING, QP_GRID_REACH);
        worst_grid_gain = worst_grid_gain.max(obj - grid);
        worst_kkt = worst_kkt.max(kkt_residual(&nominal, &rows, k_eps, &sol).max());
    }
    let elapsed = t.elapsed();
    verdict(
        failures == 0
            && worst_obj <= QP_OBJECTIVE_TOL
            && worst_grid_gain <= QP_OBJECTIVE_TOL
            && worst_kkt < QP_KKT_TOL
            && elapsed <= QP_BUDGET,
        format!(
            "{QP_INSTANCES} instances ({active} with active rows), solver errors {failures}, max |objective - exact| {worst_obj:.2e} (tol {QP_OBJECTIVE_TOL:.0e}), max (objective - best {QP_GRID_SPACING:.0e} grid point) {worst_grid_gain:.2e} (tol {QP_OBJECTIVE_TOL:.0e}), max KKT residual {worst_kkt:.2e} (tol {QP_KKT_TOL:.0e}), {:.1} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn random_snapshot(rng: &mut ChaCha8Rng, n: usize) -> World {
    let road = RoadNetwork::default();
    let mut xs: Vec<f64> = Vec::new();
    let vehicles = (0..n)
        .map(|i| {
            let lane = if rng.gen_bool(0.5) { Lane::Highway } else { Lane::Ramp };
            let x = if !xs.is_empty() && rng.gen_bool(0.05) {
                xs[rng.gen_range(0..xs.len())]
            } else {
                rng.gen_range(0.0..450.0)
            };
            xs.push(x);
            let state = VehicleState {
                x,
                y: road.centerline(lane) + rng.gen_range(-1.5..1.5),
                v_x: rng.gen_range(0.0..35.0),
                v_y: rng.gen_range(-1.0..1.0),
                psi: rng.gen_range(-0.1..0.1),
            };
            let mut v = Vehicle::new(VehicleId(i as u32), state, VehicleParams::default(), lane);
            if rng.gen_bool(0.3) {
                v.target_lane = lane.neighbor();
                v.lc_phase = LaneChangePhase::Changing;
            }
            v.crashed = rng.gen_bool(0.05);
            v.failed_merge = rng.gen_bool(0.05);
            v
        })
        .collect();
    World::new(road, ScenarioConfig::default(), ShieldConfig::default(), vehicles)
}

fn topology_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7090);
    let t = Instant::now();
    let (mut mismatches, mut not_ahead, mut order_errors, mut edges) = (0, 0, 0, 0);
    for k in 0..TOPOLOGY_SNAPSHOTS {
        let w = random_snapshot(&mut rng, 1 + k % 11);
        let g = build_topology(&w);
        if g.entries != oracles::naive_topology(&w) {
            mismatches += 1;
        }
        for (child, parent) in g.edges() {
            edges += 1;
            let (c, p) = (w.vehicle(child).unwrap(), w.vehicle(parent).unwrap());
            if !(p.state.x > c.state.x || (p.state.x == c.state.x && p.id < c.id)) {
                not_ahead += 1;
            }
        }
        match evaluation_order(&g, &w.vehicles) {
            Ok(order) => {
                let pos: BTreeMap<VehicleId, usize> =
                    order.iter().enumerate().map(|(i, id)| (*id, i)).collect();
                if pos.len() != w.vehicles.len() || g.edges().any(|(c, p)| pos[&p] >= pos[&c]) {
                    order_errors += 1;
                }
            }
            Err(_) => order_errors += 1,
        }
    }
    let elapsed = t.elapsed();
    verdict(
        mismatches == 0 && not_ahead == 0 && order_errors == 0 && elapsed <= TOPOLOGY_BUDGET,
        format!(
            "{TOPOLOGY_SNAPSHOTS} snapshots, {edges} edges, mismatches {mismatches}, parents not ahead {not_ahead}, order errors {order_errors}, {:.1} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn reward_fixed_points() -> Verdict {
    let w = RewardWeights::default();
    let checks = [
        ("r_h(12.5, 25, 0.5)", headway_reward(12.5, 25.0, 0.5), 0.0),
        ("r_s(10)", speed_reward(10.0, w.v_min, w.v_max), 0.0),
        ("r_s(30)", speed_reward(30.0, w.v_min, w.v_max), 1.0),
        ("r_m(100, 100)", merge_reward(100.0, 100.0), -1.0),
        ("w_h", w.w_h, 1.0),
        ("w_s", w.w_s, 4.0),
        ("w_m", w.w_m, 8.0),
    ];
    let bad: Vec<String> = checks
        .iter()
        .filter(|(_, got, want)| got != want)
        .map(|(name, got, want)| format!("{name} = {got} (want {want})"))
        .collect();
    verdict(
        bad.is_empty(),
        if bad.is_empty() {
            format!("{} values exact", checks.len())
        } else {
            bad.join(", ")
        },
    )
}

fn traffic_scene(rng: &mut ChaCha8Rng) -> World {
    let road = RoadNetwork::default();
    let mut next_x = [rng.gen_range(150.0..200.0), rng.gen_range(150.0..200.0)];
    let vehicles = (0..9)
        .map(|i| {
            let k = rng.gen_range(0..2);
            let lane = [Lane::Highway, Lane::Ramp][k];
            let x = next_x[k];
            next_x[k] -= rng.gen_range(12.0..40.0);
            let state = VehicleState::straight(x, road.centerline(lane), rng.gen_range(5.0..30.0));
            let mut v = Vehicle::new(VehicleId(i), state, VehicleParams::default(), lane);
            if lane == Lane::Ramp && rng.gen_bool(0.4) {
                v.target_lane = Lane::Highway;
                v.lc_phase = LaneChangePhase::Changing;
                v.state.y += rng.gen_range(0.0..2.0);
            }
            v
        })
        .collect();
    World::new(road, ScenarioConfig::default(), ShieldConfig::with_mode(ShieldMode::Mass), vehicles)
}

fn mass_permissiveness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa55);
    let (mut compared, mut weaker, mut stricter, mut scenes_strict) = (0, 0, 0, 0);
    for _ in 0..PERMISSIVENESS_SCENES {
        let mass = traffic_scene(&mut rng);
        let mut hss = mass.clone();
        hss.shield.mode = ShieldMode::Hss;
        let plans: BTreeMap<VehicleId, ControlTarget> = mass
            .vehicles
            .iter()
            .map(|v| {
                let target = ControlTarget {
                    v_nominal: (v.speed() + rng.gen_range(-2.0..4.0)).clamp(0.0, v.params.v_cap),
                    target_lane: v.target_lane,
                };
                (v.id, target)
            })
            .collect();
        let topo = build_topology(&mass);
        let a = joint_safe_control(&mass, &topo, &plans).expect("acyclic");
        let b = joint_safe_control(&hss, &topo, &plans).expect("acyclic");
        let mut scene_strict = false;
        for (id, out) in &a {
            compared += 1;
            if out.v_safe < b[id].v_safe {
                weaker += 1;
            }
            if out.v_safe > b[id].v_safe {
                stricter += 1;
                scene_strict = true;
            }
        }
        scenes_strict += scene_strict as usize;
    }
    verdict(
        weaker == 0 && stricter >= 1,
        format!(
            "{PERMISSIVENESS_SCENES} scenes, {compared} vehicles: collaborative below worst-case {weaker}, strictly above {stricter} (in {scenes_strict} scenes)"
        ),
    )
}

fn merging_smoke() -> Verdict {
    let pct = |kind| {
        batch(ShieldMode::Mass, kind, 9, 0, MERGE_EPISODES)
            .report
            .aggregate
            .merging_pct
            .unwrap_or(0.0)
    };
    let heuristic = pct(PolicyKind::Heuristic);
    let random = pct(PolicyKind::Random);
    verdict(
        heuristic > 0.0 && heuristic > random,
        format!("{MERGE_EPISODES} episodes, heuristic {heuristic:.2} % vs random {random:.2} %"),
    )
}

fn read_outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for name in [SUMMARY_CSV, AGGREGATE_JSON] {
        files.insert(name.to_string(), std::fs::read(dir.join(name)).expect("output exists"));
    }
    for entry in std::fs::read_dir(dir.join(EPISODE_DIR)).expect("episode dir") {
        let path = entry.expect("dir entry").path();
        let name = format!("{EPISODE_DIR}/{}", path.file_name().unwrap().to_string_lossy());
        files.insert(name, std::fs::read(&path).expect("readable"));
    }
    files
}

fn determinism() -> Verdict {
    let mut compared = 0;
    let mut differing = Vec::new();
    for (mode, kind) in [
        (ShieldMode::Mass, PolicyKind::Random),
        (ShieldMode::Hss, PolicyKind::Heuristic),
        (ShieldMode::None, PolicyKind::Random),
    ] {
        let run = || {
            let dir = tempfile::tempdir().expect("tempdir");
            let mut cfg = RunConfig::default();
            cfg.shield.mode = mode;
            cfg.policy.kind = kind.clone();
            cfg.run.episodes = 6;
            cfg.run.seed = 40;
            cfg.run.output_dir = Some(dir.path().to_path_buf());
            cfg.run.emit_trajectories = true;
            run_batch(&cfg).expect("batch runs");
            read_outputs(dir.path())
        };
        let (a, b) = (run(), run());
        compared += a.len();
        if a != b {
            differing.push(format!("{mode}/{kind}"));
        }
    }
    verdict(
        differing.is_empty(),
        format!("{compared} files compared byte for byte, differing runs: {differing:?}"),
    )
}

fn shell_quote(p: &Path) -> String {
    format!("'{}'", p.display().to_string().replace('\'', r"'\''"))
}

fn step_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .expect("record exists")
        .lines()
        .filter(|l| l.contains(r#""record":"step""#))
        .map(str::to_owned)
        .collect()
}

fn protocol_conformance() -> Verdict {
    let bin = Path::new(env!("CARGO_BIN_EXE_mergeshield"));
    let dir = tempfile::tempdir().expect("tempdir");
    let seed = "17";
    let run = |out: &Path, policy: &str| {
        Command::new(bin)
            .args(["run", "--episodes", "1", "--seed", seed, "--shield", "mass", "--trajectories"])
            .arg("--policy")
            .arg(policy)
            .arg("--out")
            .arg(out)
            .output()
            .expect("binary runs")
    };
    let recorded_dir = dir.path().join("recorded");
    let first = run(&recorded_dir, "heuristic");
    if !first.status.success() {
        return verdict(false, format!("recording run failed: {}", String::from_utf8_lossy(&first.stderr)));
    }
    let recorded = recorded_dir.join(EPISODE_DIR).join(format!("episode_{seed}.jsonl"));
    let responder = format!("{} respond-replay {}", shell_quote(bin), shell_quote(&recorded));
    let replay_dir = dir.path().join("replayed");
    let second = run(&replay_dir, &format!("external:{responder}"));
    if !second.status.success() {
        return verdict(false, format!("replay run failed: {}", String::from_utf8_lossy(&second.stderr)));
    }
    let replayed = replay_dir.join(EPISODE_DIR).join(format!("episode_{seed}.jsonl"));

    let (a, b) = (step_lines(&recorded), step_lines(&replayed));
    let same_steps = !a.is_empty() && a == b;
    let (ra, rb) = (
        EpisodeRecord::load(&recorded).expect("loads"),
        EpisodeRecord::load(&replayed).expect("loads"),
    );
    let mut sb = rb.summary.clone();
    sb.policy = ra.summary.policy.clone();
    let same_summary = serde_json::to_string(&ra.summary).unwrap() == serde_json::to_string(&sb).unwrap();
    verdict(
        same_steps && same_summary && rb.summary.protocol_warnings == 0,
        format!(
            "{} step lines identical: {same_steps}, summary identical apart from the policy label: {same_summary}, warnings {}",
            a.len(),
            rb.summary.protocol_warnings
        ),
    )
}

fn main() {
    type Check = (&'static str, fn() -> Verdict);
    let checks: [Check; 9] = [
        ("safety guarantee (mass)", || safety(ShieldMode::Mass)),
        ("safety guarantee (hss)", || safety(ShieldMode::Hss)),
        ("unshielded contrast", unshielded_contrast),
        ("qp oracle equivalence", qp_oracle),
        ("topology oracle equivalence", topology_oracle),
        ("reward fixed points", reward_fixed_points),
        ("mass permissiveness", mass_permissiveness),
        ("merging smoke test", merging_smoke),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    let mut report = |name: &str, v: Verdict| {
        if !v.pass {
            failed += 1;
        }
        println!("{} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    };
    for (name, check) in checks {
        report(name, check());
    }
    report("protocol conformance", protocol_conformance());
    if failed > 0 {
        println!("{failed} acceptance check(s) failed");
        std::process::exit(1);
    }
    println!("all acceptance checks passed");
}
