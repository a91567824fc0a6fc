//! Batch experiment runner: torque-sweep heatmaps over the linked pendulums,
//! flock studies with order-parameter and empowerment series, bimodality
//! scoring, and delimited-text outputs.

mod channel_file;
mod report;

pub use channel_file::{read_channel_file, write_channel_file};
pub use report::{
    emit_report, read_sweep_table, write_histogram, write_metadata, write_metric_series,
    write_plot_scripts, write_snapshot, write_sweep_table, write_trajectory, ReportBundle,
};

use rayon::prelude::*;

use crate::channel::{NoiseCovariance, PowerBudget};
use crate::control::{run_episode, ControlOptions, EpisodeRecord, PolicyAssignment};
use crate::env::flock::{order_parameter, FlockConfig, FlockEnv, HeadingHistogram};
use crate::env::pendulum::{classify_outcome, OutcomeLabel, PendulumConfig, PendulumEnv};
use crate::error::{Error, Result};
use crate::game::{GameConfig, SensorMatrix, DEFAULT_MAX_SWEEPS, DEFAULT_TOLERANCE};
use crate::linearize::JointState;
use crate::rng::{hash3, SplitMix};

/// Observation noise level used by the harness when none is configured:
/// isotropic `1e-2 · I` in sensed-output space.
pub const DEFAULT_NOISE_LEVEL: f64 = 1e-2;

/// Amplitude of the seeded initial-angle perturbation for pendulum episodes.
/// Exact hanging rest is a symmetric fixed point of the policy (candidate
/// values tie even), so episodes start within ±0.01 rad of it.
pub const REST_PERTURBATION: f64 = 0.01;

/// Probing budget for an actuation bound: full-amplitude probing across the
/// horizon, `P = t · d_u · bound²`.
pub fn budget_for_bound(bound: f64, horizon: usize, action_dim: usize) -> Result<PowerBudget> {
    PowerBudget::new(horizon as f64 * action_dim as f64 * bound * bound)
}

/// Game configuration for a pendulum instance: angle-selecting sensors,
/// isotropic observation noise, budgets from the torque bounds.
pub fn pendulum_game(
    config: &PendulumConfig,
    horizon: usize,
    noise_level: f64,
) -> Result<GameConfig> {
    let n = config.num_agents();
    GameConfig::new(
        config
            .torque_bounds
            .iter()
            .map(|&b| budget_for_bound(b, horizon, 1))
            .collect::<Result<_>>()?,
        vec![NoiseCovariance::isotropic(1, noise_level)?; n],
        vec![SensorMatrix::select_coordinate(2, 0)?; n],
        DEFAULT_TOLERANCE,
        DEFAULT_MAX_SWEEPS,
    )
}

/// Game configuration for a flock instance: heading-selecting sensors,
/// isotropic observation noise, budgets from the acceleration bound.
pub fn flock_game(config: &FlockConfig, horizon: usize, noise_level: f64) -> Result<GameConfig> {
    let n = config.agents;
    GameConfig::new(
        vec![budget_for_bound(config.accel_bound, horizon, 1)?; n],
        vec![NoiseCovariance::isotropic(1, noise_level)?; n],
        vec![SensorMatrix::select_coordinate(4, 2)?; n],
        DEFAULT_TOLERANCE,
        DEFAULT_MAX_SWEEPS,
    )
}

/// Hanging rest with a seeded angle perturbation of ±[`REST_PERTURBATION`].
pub fn perturbed_rest(config: &PendulumConfig, seed: u64) -> JointState {
    let mut rng = SplitMix::new(seed ^ 0x9E3D_0E57_0000_0007);
    let agents = (0..config.num_agents())
        .map(|_| {
            nalgebra::DVector::from_vec(vec![
                rng.uniform(-REST_PERTURBATION, REST_PERTURBATION),
                0.0,
            ])
        })
        .collect();
    JointState::new(agents).expect("agents ≥ 1")
}

/// A torque-sweep study: the cell grid, the per-cell policy assignment, and
/// episode bookkeeping.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    /// `(τ_max left, τ_max right)` per cell.
    pub torques: Vec<(f64, f64)>,
    /// Policy assignment applied in every cell.
    pub assignment: PolicyAssignment,
    /// Planning horizon (steps).
    pub horizon: usize,
    /// Episode length (steps).
    pub episode_steps: usize,
    /// Episodes per cell; outcomes are decided by majority.
    pub repetitions: usize,
    /// Base seed; per-episode seeds derive from (cell, repetition).
    pub base_seed: u64,
}

impl SweepSpec {
    /// Full grid over the Cartesian product of the two torque axes.
    pub fn grid(
        left: &[f64],
        right: &[f64],
        assignment: PolicyAssignment,
        horizon: usize,
        episode_steps: usize,
        repetitions: usize,
        base_seed: u64,
    ) -> Result<Self> {
        if left.is_empty() || right.is_empty() {
            return Err(Error::EmptyInput("sweep grid must be nonempty"));
        }
        if repetitions == 0 {
            return Err(Error::InvalidConfig("repetitions must be ≥ 1".into()));
        }
        let torques = left
            .iter()
            .flat_map(|&a| right.iter().map(move |&b| (a, b)))
            .collect();
        Ok(SweepSpec {
            torques,
            assignment,
            horizon,
            episode_steps,
            repetitions,
            base_seed,
        })
    }
}

/// One evaluated sweep cell.
#[derive(Clone, Debug)]
pub struct SweepCell {
    pub tau_left: f64,
    pub tau_right: f64,
    /// Majority outcome; `None` when every repetition failed.
    pub outcome: Option<OutcomeLabel>,
    /// Final-step empowerment per agent, averaged over repetitions.
    pub final_empowerment: Vec<f64>,
    /// Time-mean empowerment per agent, averaged over repetitions.
    pub mean_empowerment: Vec<f64>,
    pub error: Option<String>,
}

/// Heatmap table keyed by `(τ_left, τ_right)`.
#[derive(Clone, Debug)]
pub struct SweepTable {
    pub cells: Vec<SweepCell>,
    pub agents: usize,
}

impl SweepTable {
    /// The cell at a torque pair, if present.
    pub fn cell(&self, tau_left: f64, tau_right: f64) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.tau_left == tau_left && c.tau_right == tau_right)
    }

    /// Cells whose outcome has the left pendulum up.
    pub fn left_up_cells(&self) -> Vec<(f64, f64)> {
        self.cells
            .iter()
            .filter(|c| {
                matches!(
                    c.outcome,
                    Some(OutcomeLabel::LeftUp) | Some(OutcomeLabel::BothUp)
                )
            })
            .map(|c| (c.tau_left, c.tau_right))
            .collect()
    }
}

fn majority_label(labels: &[OutcomeLabel]) -> Option<OutcomeLabel> {
    use OutcomeLabel::*;
    if labels.is_empty() {
        return None;
    }
    let candidates = [LeftUp, RightUp, BothUp, NeitherUp];
    let counts: Vec<usize> = candidates
        .iter()
        .map(|c| labels.iter().filter(|&&l| l == *c).count())
        .collect();
    let best = *counts.iter().max().expect("four candidates");
    let winners: Vec<OutcomeLabel> = candidates
        .iter()
        .zip(&counts)
        .filter(|(_, &c)| c == best)
        .map(|(l, _)| *l)
        .collect();
    Some(if winners.len() == 1 {
        winners[0]
    } else {
        NeitherUp
    })
}

/// Seed of one sweep episode: a pure function of the torque pair and the
/// repetition, so cell results cannot depend on grid order or parallelism.
fn cell_seed(base_seed: u64, tau: (f64, f64), rep: usize) -> u64 {
    hash3(
        base_seed,
        tau.0.to_bits() ^ tau.1.to_bits().rotate_left(17),
        rep as u64,
    )
}

fn run_sweep_cell(
    tau: (f64, f64),
    spec: &SweepSpec,
    base: &PendulumConfig,
    game_template: &GameConfig,
) -> SweepCell {
    let config = PendulumConfig {
        torque_bounds: vec![tau.0, tau.1],
        ..base.clone()
    };
    let n = config.num_agents();
    let mut cell = SweepCell {
        tau_left: tau.0,
        tau_right: tau.1,
        outcome: None,
        final_empowerment: vec![0.0; n],
        mean_empowerment: vec![0.0; n],
        error: None,
    };

    let run_all = || -> Result<(Vec<OutcomeLabel>, Vec<f64>, Vec<f64>, Option<String>)> {
        let env = PendulumEnv::new(config.clone())?;
        let mut game = pendulum_game(&config, spec.horizon, DEFAULT_NOISE_LEVEL)?;
        game.tolerance = game_template.tolerance;
        game.max_sweeps = game_template.max_sweeps;
        game.sensor_noise = game_template.sensor_noise.clone();

        let mut labels = Vec::new();
        let mut final_e = vec![0.0; n];
        let mut mean_e = vec![0.0; n];
        let mut soft_error = None;
        for rep in 0..spec.repetitions {
            let seed = cell_seed(spec.base_seed, tau, rep);
            let x0 = perturbed_rest(&config, seed);
            let record = run_episode(
                &env,
                &x0,
                &spec.assignment,
                spec.horizon,
                spec.episode_steps,
                &game,
                &ControlOptions::default(),
            )?;
            if let Some(err) = &record.error {
                soft_error = Some(err.clone());
                continue;
            }
            labels.push(classify_outcome(&config, &record.final_state));
            if let Some(last) = record.final_empowerment() {
                for a in 0..n {
                    final_e[a] += last[a] / spec.repetitions as f64;
                }
            }
            for a in 0..n {
                let series: f64 = record.steps.iter().map(|s| s.empowerment[a]).sum();
                mean_e[a] += series / (record.steps.len() as f64 * spec.repetitions as f64);
            }
        }
        Ok((labels, final_e, mean_e, soft_error))
    };

    match run_all() {
        Ok((labels, final_e, mean_e, soft_error)) => {
            cell.outcome = majority_label(&labels);
            cell.final_empowerment = final_e;
            cell.mean_empowerment = mean_e;
            cell.error = soft_error;
        }
        Err(err) => {
            cell.error = Some(err.to_string());
        }
    }
    cell
}

/// Evaluates every sweep cell (in parallel; cells are independent) and
/// returns the heatmap table. Per-cell failures are recorded in the cell and
/// do not abort the sweep.
pub fn run_sweep(
    spec: &SweepSpec,
    base: &PendulumConfig,
    game_template: &GameConfig,
) -> Result<SweepTable> {
    if spec.torques.is_empty() {
        return Err(Error::EmptyInput("sweep grid must be nonempty"));
    }
    base.validate()?;
    let cells: Vec<SweepCell> = spec
        .torques
        .par_iter()
        .map(|&tau| run_sweep_cell(tau, spec, base, game_template))
        .collect();
    Ok(SweepTable {
        cells,
        agents: base.num_agents(),
    })
}

/// Time series of flock-level statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricSeries {
    pub time: Vec<f64>,
    /// Mean empowerment across agents.
    pub mean_empowerment: Vec<f64>,
    /// Order parameter in [0, 1].
    pub order_parameter: Vec<f64>,
}

impl MetricSeries {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }
}

/// Agent positions and headings at one instant.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    /// `(x, y, heading)` per agent.
    pub agents: Vec<(f64, f64, f64)>,
}

/// Everything a flock study produces.
#[derive(Clone, Debug)]
pub struct FlockStudy {
    pub series: MetricSeries,
    pub snapshots: Vec<Snapshot>,
    /// Mean-referenced heading histograms at the snapshot steps.
    pub histograms: Vec<(usize, HeadingHistogram)>,
    pub episode: EpisodeRecord,
}

/// Default bin count for study histograms.
pub const HISTOGRAM_BINS: usize = 36;

/// Runs one flock episode and derives order-parameter/empowerment series,
/// snapshots, and heading histograms at the requested steps (the final step
/// is always included).
pub fn run_flock_study(
    config: &FlockConfig,
    assignment: &PolicyAssignment,
    horizon: usize,
    episode_steps: usize,
    game: &GameConfig,
    options: &ControlOptions,
    snapshot_steps: &[usize],
) -> Result<FlockStudy> {
    config.validate()?;
    let env = FlockEnv::new(config.clone())?;
    let x0 = config.random_initial_state();
    let mut episode = run_episode(&env, &x0, assignment, horizon, episode_steps, game, options)?;
    episode.config_snapshot = toml::to_string(config).ok();

    let mut time = Vec::with_capacity(episode.steps.len());
    let mut mean_emp = Vec::with_capacity(episode.steps.len());
    let mut order = Vec::with_capacity(episode.steps.len());
    for step in &episode.steps {
        time.push(step.time);
        mean_emp.push(step.empowerment.iter().sum::<f64>() / step.empowerment.len() as f64);
        order.push(order_parameter(&FlockEnv::headings(&step.state))?);
    }

    let mut wanted: Vec<usize> = snapshot_steps
        .iter()
        .copied()
        .filter(|&s| s < episode.steps.len())
        .collect();
    let last = episode.steps.len().saturating_sub(1);
    if !wanted.contains(&last) {
        wanted.push(last);
    }
    wanted.sort_unstable();
    wanted.dedup();

    let mut snapshots = Vec::new();
    let mut histograms = Vec::new();
    for &s in &wanted {
        let state = &episode.steps[s].state;
        snapshots.push(Snapshot {
            step: s,
            time: episode.steps[s].time,
            agents: state
                .agents()
                .iter()
                .map(|a| (a[0], a[1], a[2]))
                .collect(),
        });
        histograms.push((
            s,
            crate::env::flock::heading_histogram(&FlockEnv::headings(state), true, HISTOGRAM_BINS)?,
        ));
    }

    Ok(FlockStudy {
        series: MetricSeries {
            time,
            mean_empowerment: mean_emp,
            order_parameter: order,
        },
        snapshots,
        histograms,
        episode,
    })
}

/// Two-cluster structure of a heading population.
#[derive(Clone, Copy, Debug)]
pub struct BimodalityReport {
    /// Circular 2-means centers.
    pub centers: [f64; 2],
    /// Circular distance between the centers, in `[0, π]`.
    pub separation: f64,
    /// Fraction of agents within 0.5 rad of their assigned center.
    pub mass_fraction: f64,
}

impl BimodalityReport {
    /// The Fig.-4-style test: centers (π ± 0.5) apart — on the circle that
    /// means separation ≥ π − 0.5 — holding at least 70% of agents.
    pub fn is_bimodal(&self) -> bool {
        self.separation >= std::f64::consts::PI - 0.5 && self.mass_fraction >= 0.7
    }
}

fn circular_distance(a: f64, b: f64) -> f64 {
    crate::env::pendulum::wrap_angle(a - b).abs()
}

/// Circular 2-means over headings, deterministically initialized from the
/// two tallest histogram bins.
pub fn bimodality(headings: &[f64]) -> Result<BimodalityReport> {
    if headings.len() < 2 {
        return Err(Error::EmptyInput("bimodality needs ≥ 2 headings"));
    }
    let hist = crate::env::flock::heading_histogram(headings, false, HISTOGRAM_BINS)?;
    let mut order: Vec<usize> = (0..hist.counts.len()).collect();
    order.sort_by(|&a, &b| hist.counts[b].cmp(&hist.counts[a]).then(a.cmp(&b)));
    let mut centers = [hist.centers[order[0]], hist.centers[order[1]]];

    for _ in 0..100 {
        let mut sums = [(0.0_f64, 0.0_f64); 2];
        for &t in headings {
            let k = if circular_distance(t, centers[0]) <= circular_distance(t, centers[1]) {
                0
            } else {
                1
            };
            sums[k].0 += t.cos();
            sums[k].1 += t.sin();
        }
        let mut moved = 0.0_f64;
        for k in 0..2 {
            if sums[k].0 != 0.0 || sums[k].1 != 0.0 {
                let next = sums[k].1.atan2(sums[k].0);
                moved = moved.max(circular_distance(next, centers[k]));
                centers[k] = next;
            }
        }
        if moved < 1e-10 {
            break;
        }
    }

    let within = headings
        .iter()
        .filter(|&&t| {
            circular_distance(t, centers[0]).min(circular_distance(t, centers[1])) <= 0.5
        })
        .count();
    Ok(BimodalityReport {
        centers,
        separation: circular_distance(centers[0], centers[1]),
        mass_fraction: within as f64 / headings.len() as f64,
    })
}
