use std::collections::BTreeMap;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use mergeshield_core::metrics::{headway_threshold, summarize};
use mergeshield_core::policy::protocol::{self, AgentAction};
use mergeshield_core::reward::headway_reward;
use mergeshield_core::{
    run_batch, EpisodeRecord, PolicyKind, RewardKind, RunConfig, ShieldMode,
};

const EXIT_ERROR: u8 = 1;
const EXIT_VIOLATION: u8 = 3;
const REWARD_CURVE_SCHEMA: &str = "mergeshield.reward_curve/1";

/// Safety-shielded multi-agent highway merging simulator.
///
/// Log verbosity is read from MERGESHIELD_LOG (error, warn, info, debug, trace).
#[derive(Parser)]
#[command(name = "mergeshield", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch of episodes and report metrics.
    ///
    /// Flags override values from --config. Exits with status 3 if any
    /// episode under the hss or mass shield violates the headway or collides.
    Run(RunArgs),
    /// Check a configuration file.
    Validate {
        path: PathBuf,
        /// Accept fleets outside the reference 7-11 range.
        #[arg(long)]
        allow_out_of_range: bool,
    },
    /// Write the headway reward as a function of the gap, as CSV.
    RewardCurve {
        /// Ego speed (m/s).
        #[arg(long, default_value_t = 25.0)]
        speed: f64,
        /// Headway threshold (s).
        #[arg(long, default_value_t = 0.5)]
        tau: f64,
        #[arg(long, default_value_t = 1.0)]
        dx_min: f64,
        #[arg(long, default_value_t = 50.0)]
        dx_max: f64,
        #[arg(long, default_value_t = 50)]
        points: usize,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute the metrics of a stored episode record.
    Replay {
        record: PathBuf,
    },
    /// Act as an external policy that plays back the actions of a stored record.
    #[command(hide = true)]
    RespondReplay {
        record: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// none | hss | mass
    #[arg(long)]
    shield: Option<ShieldMode>,
    /// default | custom
    #[arg(long)]
    reward: Option<RewardKind>,
    /// random | heuristic | external:CMD
    #[arg(long)]
    policy: Option<PolicyKind>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write one JSON-lines record per episode under OUT/episodes.
    #[arg(long)]
    trajectories: bool,
    /// Accept fleets outside the reference 7-11 range.
    #[arg(long)]
    allow_out_of_range: bool,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(n) = self.episodes {
            cfg.run.episodes = n;
        }
        if let Some(s) = self.seed {
            cfg.run.seed = s;
        }
        if let Some(m) = self.shield {
            cfg.shield.mode = m;
        }
        if let Some(k) = self.reward {
            cfg.reward.kind = k;
        }
        if let Some(p) = &self.policy {
            cfg.policy.kind = p.clone();
        }
        if let Some(out) = &self.out {
            cfg.run.output_dir = Some(out.clone());
        }
        if self.trajectories {
            cfg.run.emit_trajectories = true;
        }
        if self.allow_out_of_range {
            cfg.run.allow_out_of_range = true;
        }
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MERGESHIELD_LOG", "warn"))
        .init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Run(args) => run(&args),
        Command::Validate {
            path,
            allow_out_of_range,
        } => validate(&path, allow_out_of_range),
        Command::RewardCurve {
            speed,
            tau,
            dx_min,
            dx_max,
            points,
            out,
        } => reward_curve(speed, tau, dx_min, dx_max, points, out.as_deref()),
        Command::Replay { record } => replay(&record),
        Command::RespondReplay { record } => respond_replay(&record),
    }
}

fn run(args: &RunArgs) -> Result<ExitCode> {
    let cfg = args.resolve()?;
    let report = cfg.check();
    for w in &report.warnings {
        log::warn!("{w}");
    }
    if let Some(e) = report.errors.first() {
        bail!("invalid configuration: {e}");
    }
    let outcome = run_batch(&cfg)?;
    let agg = &outcome.report.aggregate;
    let mut out = io::stdout().lock();
    writeln!(
        out,
        "episodes {}  shield {}  policy {}  reward {}",
        agg.episodes, cfg.shield.mode, cfg.policy.kind, cfg.reward.kind
    )?;
    match agg.min_headway {
        Some(m) => writeln!(out, "min headway     {:.3} ({:.3}) s, worst {:.3} s", m.mean, m.se, agg.worst_headway)?,
        None => writeln!(out, "min headway     no interacting vehicles")?,
    }
    if let Some(m) = agg.avg_speed {
        writeln!(out, "average speed   {:.3} ({:.3}) m/s", m.mean, m.se)?;
    }
    match agg.merging_pct {
        Some(p) => writeln!(out, "merging         {p:.2} %")?,
        None => writeln!(out, "merging         no ramp vehicles")?,
    }
    writeln!(
        out,
        "collisions {}  shield faults {}  violations {} (headway < {:.2} s)",
        agg.collisions, agg.shield_faults, agg.violations, outcome.report.headway_threshold
    )?;
    if agg.protocol_warnings > 0 {
        writeln!(out, "protocol warnings {}", agg.protocol_warnings)?;
    }
    if let Some(dir) = &cfg.run.output_dir {
        writeln!(out, "outputs in {}", dir.display())?;
    }
    if outcome.shield_violations() > 0 {
        return Ok(ExitCode::from(EXIT_VIOLATION));
    }
    Ok(ExitCode::SUCCESS)
}

fn validate(path: &Path, allow_out_of_range: bool) -> Result<ExitCode> {
    let mut cfg = match RunConfig::load(path) {
        Ok(c) => c,
        Err(e) => {
            println!("{}: invalid", path.display());
            println!("  error: {e}");
            return Ok(ExitCode::from(EXIT_ERROR));
        }
    };
    if allow_out_of_range {
        cfg.run.allow_out_of_range = true;
    }
    let report = cfg.check();
    let verdict = if report.is_ok() { "valid" } else { "invalid" };
    println!("{}: {verdict}", path.display());
    for e in &report.errors {
        println!("  error: {e}");
    }
    for w in &report.warnings {
        println!("  warning: {w}");
    }
    Ok(if report.is_ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_ERROR)
    })
}

fn reward_curve(
    speed: f64,
    tau: f64,
    dx_min: f64,
    dx_max: f64,
    points: usize,
    out: Option<&Path>,
) -> Result<ExitCode> {
    if !(dx_min > 0.0 && dx_max > dx_min) || points < 2 {
        bail!("need 0 < dx-min < dx-max and at least 2 points");
    }
    if !(speed > 0.0 && tau > 0.0) {
        bail!("speed and tau must be positive");
    }
    let mut text = format!("# schema: {REWARD_CURVE_SCHEMA}\n# speed={speed} tau={tau}\ndx,r_h\n");
    for i in 0..points {
        let dx = dx_min + (dx_max - dx_min) * i as f64 / (points - 1) as f64;
        text.push_str(&format!("{dx},{}\n", headway_reward(dx, speed, tau)));
    }
    match out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(ExitCode::SUCCESS)
}

fn replay(path: &Path) -> Result<ExitCode> {
    let record = EpisodeRecord::load(path)?;
    let recomputed = summarize(
        &record.header,
        &record.steps,
        record.summary.protocol_warnings,
    )?;
    println!("{}", serde_json::to_string_pretty(&recomputed)?);
    if recomputed != record.summary {
        eprintln!("recomputed summary differs from the stored one");
        return Ok(ExitCode::from(EXIT_ERROR));
    }
    let threshold = headway_threshold(record.header.shield.tau);
    if record.header.shield.mode != ShieldMode::None && recomputed.violates(threshold) {
        return Ok(ExitCode::from(EXIT_VIOLATION));
    }
    Ok(ExitCode::SUCCESS)
}

fn respond_replay(path: &Path) -> Result<ExitCode> {
    let record = EpisodeRecord::load(path)?;
    let by_step: BTreeMap<u64, Vec<AgentAction>> = record
        .steps
        .iter()
        .map(|s| {
            let actions = s
                .actions
                .iter()
                .map(|(id, a)| AgentAction::new(*id, *a))
                .collect();
            (s.step, actions)
        })
        .collect();
    let handler = protocol::responder(|step, agents| match by_step.get(&step) {
        Some(actions) => actions.clone(),
        None => {
            log::warn!("no recorded actions for step {step}");
            agents
                .iter()
                .map(|a: &protocol::AgentState| AgentAction {
                    id: a.id,
                    action: serde_json::Value::Null,
                })
                .collect()
        }
    });
    let stdin = io::stdin().lock();
    let stdout = BufWriter::new(io::stdout().lock());
    protocol::serve(stdin, stdout, handler)?;
    Ok(ExitCode::SUCCESS)
}
