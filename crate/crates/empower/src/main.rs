//! Command-line front end: single pendulum episodes, torque sweeps, flock
//! studies, and standalone game solves from channel files.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use empower::control::{run_episode, ControlOptions, EpisodeRecord, Policy, PolicyAssignment};
use empower::env::flock::FlockConfig;
use empower::env::pendulum::{classify_outcome, PendulumConfig, PendulumEnv};
use empower::error::{Error, Result};
use empower::game::solve_game;
use empower::harness::{
    emit_report, flock_game, pendulum_game, perturbed_rest, read_channel_file, run_flock_study,
    run_sweep, ReportBundle, SweepSpec, DEFAULT_NOISE_LEVEL,
};
use empower::rng::SplitMix;

#[derive(Parser)]
#[command(name = "empower", version, about = "Multi-agent empowerment studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// TOML config file with [pendulum], [flock], and [game] sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Per-agent policies, comma separated: egoistic | altruistic:N |
    /// passive. A single entry applies to every agent.
    #[arg(long, default_value = "egoistic")]
    policy: String,
    /// Planning horizon in steps.
    #[arg(long)]
    horizon: Option<usize>,
    /// Episode length in steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Base seed for initial states and noise streams.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for data files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Candidate grid size per action coordinate.
    #[arg(long)]
    candidates: Option<usize>,
    /// Neighborhood-local candidate evaluation: on | off. Defaults to on
    /// for the flock and off elsewhere.
    #[arg(long)]
    sparsify: Option<String>,
    /// Also emit plot scripts next to the data.
    #[arg(long, default_value_t = false)]
    plots: bool,
}

#[derive(Subcommand)]
enum Command {
    /// One linked-pendulum episode.
    Pendulum(CommonArgs),
    /// Torque-sweep heatmap over the linked pendulums.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Grid values for the left torque axis, comma separated.
        #[arg(long, default_value = "0.5,1.75,3,4,5.5")]
        grid_left: String,
        /// Grid values for the right torque axis (defaults to the left axis).
        #[arg(long)]
        grid_right: Option<String>,
        /// Episodes per cell.
        #[arg(long, default_value_t = 1)]
        reps: usize,
    },
    /// Flock study: order parameter, empowerment, snapshots, histograms.
    Flock {
        #[command(flatten)]
        common: CommonArgs,
        /// Steps at which to take snapshots/histograms, comma separated.
        #[arg(long, default_value = "0")]
        snapshots: String,
    },
    /// Standalone iterative water-filling on a channel file.
    Channel {
        /// Channel file (block-matrix game description).
        #[arg(long)]
        input: PathBuf,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct GameFileSection {
    noise_level: Option<f64>,
    tolerance: Option<f64>,
    max_sweeps: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    pendulum: Option<PendulumConfig>,
    flock: Option<FlockConfig>,
    game: Option<GameFileSection>,
}

fn load_config(path: &Option<PathBuf>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{p:?}: {e}")))
        }
    }
}

fn parse_policies(spec: &str, agents: usize) -> Result<Vec<Policy>> {
    let parse_one = |token: &str| -> Result<Policy> {
        let token = token.trim();
        if token.eq_ignore_ascii_case("egoistic") || token.eq_ignore_ascii_case("ego") {
            return Ok(Policy::Egoistic);
        }
        if token.eq_ignore_ascii_case("passive") {
            return Ok(Policy::Passive);
        }
        if let Some(rest) = token
            .strip_prefix("altruistic:")
            .or_else(|| token.strip_prefix("alt:"))
        {
            let target: usize = rest
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad altruistic target {rest:?}")))?;
            return Ok(Policy::Altruistic(target));
        }
        Err(Error::InvalidConfig(format!("unknown policy {token:?}")))
    };
    let tokens: Vec<&str> = spec.split(',').collect();
    if tokens.len() == 1 {
        return Ok(vec![parse_one(tokens[0])?; agents]);
    }
    if tokens.len() != agents {
        return Err(Error::InvalidConfig(format!(
            "{} policies for {agents} agents",
            tokens.len()
        )));
    }
    tokens.iter().map(|t| parse_one(t)).collect()
}

fn parse_f64_list(spec: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad number {t:?}")))
        })
        .collect()
}

fn parse_usize_list(spec: &str) -> Result<Vec<usize>> {
    spec.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad integer {t:?}")))
        })
        .collect()
}

fn parse_sparsify(spec: &Option<String>, default_on: bool) -> Result<bool> {
    match spec.as_deref() {
        None => Ok(default_on),
        Some("on") => Ok(true),
        Some("off") => Ok(false),
        Some(other) => Err(Error::InvalidConfig(format!(
            "--sparsify wants on|off, got {other:?}"
        ))),
    }
}

/// Digest of a config's serialized form, recorded in the metadata file.
fn digest(text: &str) -> u64 {
    let mut acc = SplitMix::new(0x5EED_D16E_57).next_u64();
    for b in text.bytes() {
        acc = acc.rotate_left(7) ^ (b as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    }
    acc
}

fn base_metadata(name: &str, seed: u64, config_text: &str) -> Vec<(String, String)> {
    vec![
        ("command".into(), name.into()),
        ("seed".into(), seed.to_string()),
        (
            "config_digest".into(),
            format!("{:016x}", digest(config_text)),
        ),
    ]
}

fn finish_metadata(mut meta: Vec<(String, String)>, started: Instant) -> Vec<(String, String)> {
    meta.push((
        "wall_time_ms".into(),
        started.elapsed().as_millis().to_string(),
    ));
    meta
}

fn episode_summary(record: &EpisodeRecord) -> String {
    let steps = record.steps.len();
    let mean_e = record
        .steps
        .last()
        .map(|s| s.empowerment.iter().sum::<f64>() / s.empowerment.len() as f64)
        .unwrap_or(0.0);
    match &record.error {
        Some(err) => format!("{steps} steps (aborted: {err})"),
        None => format!("{steps} steps, final mean empowerment {mean_e:.4} nats"),
    }
}

fn cmd_pendulum(args: &CommonArgs) -> Result<()> {
    let started = Instant::now();
    let file = load_config(&args.config)?;
    let config = file.pendulum.unwrap_or_default();
    config.validate()?;
    let game_section = file.game.unwrap_or_default();
    let horizon = args.horizon.unwrap_or(130);
    let steps = args.steps.unwrap_or(500);
    let candidates = args.candidates.unwrap_or(9);

    let env = PendulumEnv::new(config.clone())?;
    let policies = parse_policies(&args.policy, config.num_agents())?;
    let assignment = PolicyAssignment::new(policies, candidates)?;
    let mut game = pendulum_game(
        &config,
        horizon,
        game_section.noise_level.unwrap_or(DEFAULT_NOISE_LEVEL),
    )?;
    if let Some(t) = game_section.tolerance {
        game.tolerance = t;
    }
    if let Some(m) = game_section.max_sweeps {
        game.max_sweeps = m;
    }
    let options = ControlOptions {
        sparsify: parse_sparsify(&args.sparsify, false)?,
        reuse_interference: false,
    };

    let x0 = perturbed_rest(&config, args.seed);
    let mut record = run_episode(&env, &x0, &assignment, horizon, steps, &game, &options)?;
    record.outcome = Some(classify_outcome(&config, &record.final_state));
    let config_text = toml::to_string(&config).unwrap_or_default();
    record.config_snapshot = Some(config_text.clone());
    let mut meta = base_metadata("pendulum", args.seed, &config_text);
    meta.push(("horizon".into(), horizon.to_string()));
    meta.push(("steps".into(), steps.to_string()));
    meta.push(("policy".into(), args.policy.clone()));
    meta.push((
        "outcome".into(),
        record.outcome.map(|o| o.to_string()).unwrap_or_default(),
    ));
    let meta = finish_metadata(meta, started);
    emit_report(&args.out, &ReportBundle::Episode(&record), &meta, args.plots)?;

    println!(
        "pendulum: {} outcome {}",
        episode_summary(&record),
        record.outcome.map(|o| o.to_string()).unwrap_or_default()
    );
    Ok(())
}

fn cmd_sweep(
    args: &CommonArgs,
    grid_left: &str,
    grid_right: &Option<String>,
    reps: usize,
) -> Result<()> {
    let started = Instant::now();
    let file = load_config(&args.config)?;
    let config = file.pendulum.unwrap_or_default();
    config.validate()?;
    let game_section = file.game.unwrap_or_default();
    let horizon = args.horizon.unwrap_or(130);
    let steps = args.steps.unwrap_or(500);
    let candidates = args.candidates.unwrap_or(9);

    let left = parse_f64_list(grid_left)?;
    let right = match grid_right {
        Some(spec) => parse_f64_list(spec)?,
        None => left.clone(),
    };
    let policies = parse_policies(&args.policy, config.num_agents())?;
    let assignment = PolicyAssignment::new(policies, candidates)?;
    let spec = SweepSpec::grid(&left, &right, assignment, horizon, steps, reps, args.seed)?;
    let game = {
        let mut g = pendulum_game(
            &config,
            horizon,
            game_section.noise_level.unwrap_or(DEFAULT_NOISE_LEVEL),
        )?;
        if let Some(t) = game_section.tolerance {
            g.tolerance = t;
        }
        if let Some(m) = game_section.max_sweeps {
            g.max_sweeps = m;
        }
        g
    };

    let table = run_sweep(&spec, &config, &game)?;

    let config_text = toml::to_string(&config).unwrap_or_default();
    let mut meta = base_metadata("sweep", args.seed, &config_text);
    meta.push(("horizon".into(), horizon.to_string()));
    meta.push(("steps".into(), steps.to_string()));
    meta.push(("policy".into(), args.policy.clone()));
    meta.push(("cells".into(), table.cells.len().to_string()));
    meta.push(("repetitions".into(), reps.to_string()));
    let meta = finish_metadata(meta, started);
    emit_report(&args.out, &ReportBundle::Sweep(&table), &meta, args.plots)?;

    let failed = table.cells.iter().filter(|c| c.error.is_some()).count();
    println!(
        "sweep: {} cells ({} failed), left pendulum up in {}",
        table.cells.len(),
        failed,
        table.left_up_cells().len()
    );
    Ok(())
}

fn cmd_flock(args: &CommonArgs, snapshots: &str) -> Result<()> {
    let started = Instant::now();
    let file = load_config(&args.config)?;
    let mut config = file.flock.unwrap_or_default();
    config.noise_seed = args.seed;
    config.validate()?;
    let game_section = file.game.unwrap_or_default();
    let horizon = args.horizon.unwrap_or(10);
    let steps = args.steps.unwrap_or(2000);
    let candidates = args.candidates.unwrap_or(5);

    let policies = parse_policies(&args.policy, config.agents)?;
    let assignment = PolicyAssignment::new(policies, candidates)?;
    let mut game = flock_game(
        &config,
        horizon,
        game_section.noise_level.unwrap_or(DEFAULT_NOISE_LEVEL),
    )?;
    if let Some(t) = game_section.tolerance {
        game.tolerance = t;
    }
    if let Some(m) = game_section.max_sweeps {
        game.max_sweeps = m;
    }
    let options = ControlOptions {
        sparsify: parse_sparsify(&args.sparsify, true)?,
        reuse_interference: false,
    };
    let snapshot_steps = parse_usize_list(snapshots)?;

    let study = run_flock_study(
        &config,
        &assignment,
        horizon,
        steps,
        &game,
        &options,
        &snapshot_steps,
    )?;

    let config_text = toml::to_string(&config).unwrap_or_default();
    let mut meta = base_metadata("flock", args.seed, &config_text);
    meta.push(("horizon".into(), horizon.to_string()));
    meta.push(("steps".into(), steps.to_string()));
    meta.push(("policy".into(), args.policy.clone()));
    meta.push(("agents".into(), config.agents.to_string()));
    meta.push((
        "sparsify".into(),
        if options.sparsify { "on" } else { "off" }.into(),
    ));
    let meta = finish_metadata(meta, started);
    emit_report(&args.out, &ReportBundle::Flock(&study), &meta, args.plots)?;

    let last_order = study.series.order_parameter.last().copied().unwrap_or(0.0);
    println!(
        "flock: {} order parameter {:.3} at end",
        episode_summary(&study.episode),
        last_order
    );
    Ok(())
}

fn cmd_channel(input: &Path, out: &Path) -> Result<()> {
    let started = Instant::now();
    let (sensitivity, config) = read_channel_file(input)?;
    let report = solve_game(&sensitivity, &config, None)?;

    let mut meta = base_metadata("channel", 0, &format!("{input:?}"));
    meta.push(("agents".into(), config.num_agents().to_string()));
    meta.push(("converged".into(), report.converged.to_string()));
    meta.push(("sweeps_used".into(), report.sweeps_used.to_string()));
    meta.push((
        "final_residual".into(),
        format!("{}", report.final_residual),
    ));
    let meta = finish_metadata(meta, started);
    emit_report(out, &ReportBundle::Game(&report), &meta, false)?;

    for (agent, e) in report.empowerment.iter().enumerate() {
        println!("agent {agent}: empowerment {e:.6} nats");
    }
    if !report.converged {
        println!(
            "warning: not converged after {} sweeps (residual {:.3e})",
            report.sweeps_used, report.final_residual
        );
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Pendulum(common) => cmd_pendulum(common),
        Command::Sweep {
            common,
            grid_left,
            grid_right,
            reps,
        } => cmd_sweep(common, grid_left, grid_right, *reps),
        Command::Flock { common, snapshots } => cmd_flock(common, snapshots),
        Command::Channel { input, out } => cmd_channel(input, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // Machine-readable error record on stderr, same key = value
            // format as the metadata files.
            eprintln!("status = error");
            eprintln!("kind = {}", error_kind(&err));
            eprintln!("message = {err}");
            ExitCode::FAILURE
        }
    }
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::NonPositiveDefiniteNoise => "non_positive_definite_noise",
        Error::DimensionMismatch(_) => "dimension_mismatch",
        Error::IndefiniteCovariance { .. } => "indefinite_covariance",
        Error::NonFiniteState { .. } => "non_finite_state",
        Error::ActionOutOfBounds { .. } => "action_out_of_bounds",
        Error::EmptyInput(_) => "empty_input",
        Error::InvalidConfig(_) => "invalid_config",
        Error::FactorizationFailed(_) => "factorization_failed",
        Error::ChannelFileFormat { .. } => "channel_file_format",
        Error::Io(_) => "io",
    }
}
