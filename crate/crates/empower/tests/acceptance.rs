//! Acceptance gate: one test per criterion, each printing a pass/fail line.
//!
//! Run with `cargo test --release -p empower --test acceptance -- --nocapture`
//! to see the lines as they complete. The pendulum and flock criteria are
//! the slow ones; everything is deterministic, so reruns are byte-stable.

use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use empower::channel::{capacity, waterfill, ChannelMatrix, InputCovariance, NoiseCovariance, PowerBudget};
use empower::control::{run_episode, ControlOptions, Policy, PolicyAssignment};
use empower::env::flock::FlockConfig;
use empower::env::linear::LinearEnv;
use empower::env::pendulum::{classify_outcome, OutcomeLabel, PendulumConfig, PendulumEnv};
use empower::game::{empowerment_of, solve_game, GameConfig, SensitivityMatrix, SensorMatrix};
use empower::harness::{
    bimodality, flock_game, pendulum_game, perturbed_rest, run_flock_study, run_sweep,
    write_metric_series, write_sweep_table, write_trajectory, FlockStudy, SweepSpec, SweepTable,
    DEFAULT_NOISE_LEVEL,
};
use empower::linearize::{sensitivity, sensitivity_with_step, JointState};
use empower::rng::SplitMix;

fn pass(criterion: &str, detail: String) {
    println!("criterion {criterion}: PASS ({detail})");
}

/// The heavy criteria (4-7) run one at a time so each gets the whole machine
/// and its measured runtime means something.
static HEAVY: Mutex<()> = Mutex::new(());

fn heavy_slot() -> MutexGuard<'static, ()> {
    HEAVY.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

fn random_channel(rng: &mut SplitMix, rows: usize, cols: usize) -> ChannelMatrix {
    ChannelMatrix::new(DMatrix::from_fn(rows, cols, |_, _| rng.uniform(-2.0, 2.0))).unwrap()
}

fn random_feasible(rng: &mut SplitMix, dim: usize, trace: f64) -> InputCovariance {
    let a = DMatrix::from_fn(dim, dim, |_, _| rng.uniform(-1.0, 1.0));
    let mut s = &a * a.transpose();
    let t = s.trace();
    if t > 0.0 {
        s *= trace / t;
    }
    InputCovariance::new(s).unwrap()
}

/// Criterion 1 — water-filling optimality on random channels plus
/// closed-form diagonal cases, within 10 seconds.
#[test]
fn criterion_1_waterfill_optimality() {
    let started = Instant::now();
    let mut rng = SplitMix::new(0xC1);

    // 200 random channels up to 4x4, 1000 random feasible alternatives each.
    let mut worst_gap = f64::NEG_INFINITY;
    for _ in 0..200 {
        let rows = 1 + (rng.next_u64() % 4) as usize;
        let cols = 1 + (rng.next_u64() % 4) as usize;
        let h = random_channel(&mut rng, rows, cols);
        let noise = NoiseCovariance::isotropic(rows, rng.uniform(0.05, 1.0)).unwrap();
        let p = rng.uniform(0.1, 4.0);
        let s_opt = waterfill(&h, &noise, PowerBudget::new(p).unwrap()).unwrap();
        let best = capacity(&h, &s_opt, &noise).unwrap();
        for _ in 0..1000 {
            let trace = rng.uniform(0.0, p);
            let alt = random_feasible(&mut rng, cols, trace);
            let rate = capacity(&h, &alt, &noise).unwrap();
            worst_gap = worst_gap.max(rate - best);
            assert!(
                rate <= best + 1e-8,
                "random covariance beat waterfill by {:.3e}",
                rate - best
            );
        }
    }

    // Closed-form diagonal checks. diag(2,1) at P=1: both modes wet,
    // water level μ = (1 + 1/4 + 1)/2, p = (μ-1/4, μ-1). At P=0.1 only the
    // strong mode is wet: p = (0.1, 0).
    let h = ChannelMatrix::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0])).unwrap();
    let eye = NoiseCovariance::isotropic(2, 1.0).unwrap();
    let s = waterfill(&h, &eye, PowerBudget::new(1.0).unwrap()).unwrap();
    assert!((s.matrix()[(0, 0)] - 0.875).abs() < 1e-9);
    assert!((s.matrix()[(1, 1)] - 0.125).abs() < 1e-9);
    let s = waterfill(&h, &eye, PowerBudget::new(0.1).unwrap()).unwrap();
    assert!((s.matrix()[(0, 0)] - 0.1).abs() < 1e-9);
    assert!(s.matrix()[(1, 1)].abs() < 1e-9);
    // diag(3,2,1) at P=2: μ = (2 + 1/9 + 1/4 + 1)/3; all three wet iff μ > 1.
    let h3 = ChannelMatrix::new(DMatrix::from_diagonal(&DVector::from_vec(vec![
        3.0, 2.0, 1.0,
    ])))
    .unwrap();
    let eye3 = NoiseCovariance::isotropic(3, 1.0).unwrap();
    let s = waterfill(&h3, &eye3, PowerBudget::new(2.0).unwrap()).unwrap();
    let mu = (2.0 + 1.0 / 9.0 + 0.25 + 1.0) / 3.0;
    assert!(mu > 1.0);
    for (i, g) in [1.0 / 9.0, 0.25, 1.0].iter().enumerate() {
        assert!(
            (s.matrix()[(i, i)] - (mu - g)).abs() < 1e-9,
            "mode {i}: {} vs {}",
            s.matrix()[(i, i)],
            mu - g
        );
    }

    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 10.0,
        "criterion 1 overran its 10 s budget: {elapsed:?}"
    );
    pass(
        "1 (water-filling optimality)",
        format!("worst alternative gap {worst_gap:.2e} nats, {elapsed:.2?}"),
    );
}

fn random_game_instance(
    rng: &mut SplitMix,
    agents: usize,
    d_x: usize,
    cols: usize,
    cross: f64,
) -> (SensitivityMatrix, GameConfig) {
    let blocks = (0..agents)
        .map(|n| {
            (0..agents)
                .map(|m| {
                    let scale = if n == m { 1.0 } else { cross };
                    DMatrix::from_fn(d_x, cols, |_, _| rng.uniform(-scale, scale))
                })
                .collect()
        })
        .collect();
    let sens = SensitivityMatrix::new(blocks).unwrap();
    let config = GameConfig::uniform(
        agents,
        PowerBudget::new(rng.uniform(0.5, 2.0)).unwrap(),
        NoiseCovariance::isotropic(d_x, rng.uniform(0.05, 0.3)).unwrap(),
        SensorMatrix::identity(d_x),
    )
    .unwrap();
    (sens, config)
}

/// Criterion 2 — Nash certification of converged reports and exact reduction
/// of zero-coupling games to independent water-filling, within 30 seconds.
#[test]
fn criterion_2_nash_certification() {
    let started = Instant::now();
    let mut rng = SplitMix::new(0xC2);

    let mut worst_gain = f64::NEG_INFINITY;
    for instance in 0..50 {
        let agents = 2 + (rng.next_u64() % 2) as usize;
        let (sens, config) = random_game_instance(&mut rng, agents, 2, 3, 0.4);
        let report = solve_game(&sens, &config, None).unwrap();
        assert!(report.converged, "instance {instance} did not converge");
        for agent in 0..agents {
            let base = report.empowerment[agent];
            let budget = config.budgets[agent].value();
            for _ in 0..1000 {
                let trace = rng.uniform(0.0, budget);
                let mut trial = report.covariances.clone();
                trial[agent] = random_feasible(&mut rng, 3, trace);
                let rate = empowerment_of(agent, &sens, &trial, &config).unwrap();
                worst_gain = worst_gain.max(rate - base);
                assert!(
                    rate <= base + 1e-7,
                    "instance {instance}: agent {agent} gained {:.3e} by deviating",
                    rate - base
                );
            }
        }
    }

    // Zero coupling: per-agent solutions equal the independent single-user
    // water-filling, to 1e-10.
    for _ in 0..10 {
        let agents = 3;
        let (sens, config) = random_game_instance(&mut rng, agents, 2, 3, 0.0);
        let report = solve_game(&sens, &config, None).unwrap();
        for agent in 0..agents {
            let h = ChannelMatrix::new(sens.block(agent, agent).clone()).unwrap();
            let s = waterfill(&h, &config.sensor_noise[agent], config.budgets[agent]).unwrap();
            let gap = (report.covariances[agent].matrix() - s.matrix()).norm();
            assert!(gap <= 1e-10, "agent {agent} deviates from waterfill by {gap:.2e}");
            let rate = capacity(&h, &s, &config.sensor_noise[agent]).unwrap();
            assert!((report.empowerment[agent] - rate).abs() <= 1e-10);
        }
    }

    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 30.0,
        "criterion 2 overran its 30 s budget: {elapsed:?}"
    );
    pass(
        "2 (IWF Nash certification)",
        format!("worst unilateral gain {worst_gain:.2e} nats, {elapsed:.2?}"),
    );
}

/// Criterion 3 — linearization correctness: analytic agreement on linear
/// dynamics for horizons 1–10 and step-halving consistency on the pendulum.
#[test]
fn criterion_3_linearization() {
    let started = Instant::now();
    let mut rng = SplitMix::new(0xC3);

    // Linear test environment: numeric blocks match [A^{t-1}B … B] to 1e-8.
    let n_agents = 2;
    let (d_x, d_u) = (2, 1);
    let a = DMatrix::from_fn(n_agents * d_x, n_agents * d_x, |_, _| rng.uniform(-0.3, 0.3));
    let b = DMatrix::from_fn(n_agents * d_x, n_agents * d_u, |_, _| rng.uniform(-1.0, 1.0));
    let env = LinearEnv::new(a, b, n_agents, d_x, d_u, 0.1, 1.0).unwrap();
    let x0 = JointState::new(vec![
        DVector::from_vec(vec![0.3, -0.2]),
        DVector::from_vec(vec![-0.5, 0.1]),
    ])
    .unwrap();
    let mut worst_linear: f64 = 0.0;
    for horizon in 1..=10 {
        let numeric = sensitivity(&env, &x0, horizon).unwrap();
        let analytic = env.analytic_sensitivity(horizon).unwrap();
        for n in 0..n_agents {
            for m in 0..n_agents {
                let gap = (numeric.block(n, m) - analytic.block(n, m)).norm();
                worst_linear = worst_linear.max(gap);
                assert!(gap < 1e-8, "horizon {horizon} block ({n},{m}): {gap:.2e}");
            }
        }
    }

    // Pendulum step-halving: central differences converge at order h², so
    // halving h shrinks the error (against a much finer reference) by ~4.
    // A swinging state and a sizable probe keep the truncation error well
    // above roundoff, where the ratio is meaningful.
    let config = PendulumConfig::default();
    let pend = PendulumEnv::new(config).unwrap();
    let state = JointState::new(vec![
        DVector::from_vec(vec![1.2, 1.5]),
        DVector::from_vec(vec![-0.8, -0.9]),
    ])
    .unwrap();
    let horizon = 20;
    let stack = |s: &SensitivityMatrix| -> DMatrix<f64> {
        let mut out = DMatrix::zeros(2 * 2, 2 * horizon);
        for n in 0..2 {
            for m in 0..2 {
                out.view_mut((n * 2, m * horizon), (2, horizon))
                    .copy_from(s.block(n, m));
            }
        }
        out
    };
    let h = 1.0;
    let coarse = stack(&sensitivity_with_step(&pend, &state, horizon, Some(h)).unwrap());
    let half = stack(&sensitivity_with_step(&pend, &state, horizon, Some(h / 2.0)).unwrap());
    let reference = stack(&sensitivity_with_step(&pend, &state, horizon, Some(h / 16.0)).unwrap());
    let e1 = (&coarse - &reference).norm();
    let e2 = (&half - &reference).norm();
    let ratio = e1 / e2;
    assert!(
        (3.8..=4.2).contains(&ratio),
        "step-halving error ratio {ratio:.3} outside [3.8, 4.2] (e1 {e1:.3e}, e2 {e2:.3e})"
    );

    pass(
        "3 (linearization correctness)",
        format!(
            "linear-env worst gap {worst_linear:.2e}, halving ratio {ratio:.3}, {:.2?}",
            started.elapsed()
        ),
    );
}

// ---------------------------------------------------------------------------
// Pendulum regime map (criterion 4), flock studies (criteria 5-6), and
// determinism (criterion 7). The heavy artifacts are produced once and
// shared; criterion 7 regenerates them a second time and compares bytes.
// ---------------------------------------------------------------------------

/// Torque grid of the 5x5 regime map. The top value stays under the regime
/// where two strong egoistic agents scramble chaotically (outcomes there are
/// seed lottery, not structure).
const GRID: [f64; 5] = [0.5, 1.75, 3.0, 4.0, 5.5];
/// Episode length of sweep cells: long enough for the slowest observed
/// altruistic climb to complete.
const SWEEP_STEPS: usize = 800;
/// Planning horizon for the pendulums: 1.3 s at dt = 0.01 s.
const PENDULUM_HORIZON: usize = 130;
const SWEEP_SEED: u64 = 2026;

/// Flock battery: five seeds; criterion 5 reads the first, criterion 6 all.
const FLOCK_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
const FLOCK_AGENTS: usize = 25;
const FLOCK_STEPS: usize = 2000;
/// Long enough for a candidate's rate kick to move interaction
/// neighborhoods inside the planning window; at short horizons the
/// per-candidate empowerment landscape is graph-flat and the policy cannot
/// resist alignment.
const FLOCK_HORIZON: usize = 15;
/// Desk-scale actuation: terminal turn rate a_max/ζ must outrun the
/// alignment pull for anti-consensus to be sustainable at N = 25.
const FLOCK_ACCEL_BOUND: f64 = 8.0;

fn sweep_spec(policies: Vec<Policy>) -> SweepSpec {
    let assignment = PolicyAssignment::new(policies, 9).unwrap();
    SweepSpec::grid(
        &GRID,
        &GRID,
        assignment,
        PENDULUM_HORIZON,
        SWEEP_STEPS,
        1,
        SWEEP_SEED,
    )
    .unwrap()
}

fn generate_sweeps() -> (SweepTable, SweepTable) {
    let base = PendulumConfig::default();
    let game = pendulum_game(&base, PENDULUM_HORIZON, DEFAULT_NOISE_LEVEL).unwrap();
    let egoistic = run_sweep(
        &sweep_spec(vec![Policy::Egoistic, Policy::Egoistic]),
        &base,
        &game,
    )
    .unwrap();
    let altruistic = run_sweep(
        &sweep_spec(vec![Policy::Egoistic, Policy::Altruistic(0)]),
        &base,
        &game,
    )
    .unwrap();
    (egoistic, altruistic)
}

static SWEEPS: OnceLock<(SweepTable, SweepTable)> = OnceLock::new();

fn sweeps() -> &'static (SweepTable, SweepTable) {
    SWEEPS.get_or_init(generate_sweeps)
}

/// Single-pendulum self-righting threshold by torque bisection: the smallest
/// bound (to the stated precision) at which an egoistic agent finishes an
/// episode upright.
fn bisect_self_righting_threshold() -> f64 {
    let single = PendulumConfig::default().single();
    let rights_itself = |tau: f64| -> bool {
        let config = PendulumConfig {
            torque_bounds: vec![tau],
            ..single.clone()
        };
        let env = PendulumEnv::new(config.clone()).unwrap();
        let game = pendulum_game(&config, PENDULUM_HORIZON, DEFAULT_NOISE_LEVEL).unwrap();
        let assignment = PolicyAssignment::uniform(1, Policy::Egoistic, 9).unwrap();
        let record = run_episode(
            &env,
            &perturbed_rest(&config, SWEEP_SEED),
            &assignment,
            PENDULUM_HORIZON,
            SWEEP_STEPS,
            &game,
            &ControlOptions::default(),
        )
        .unwrap();
        classify_outcome(&config, &record.final_state) == OutcomeLabel::LeftUp
    };

    let mut lo = 0.5; // known failure well below the paper-analog regime
    let mut hi = 5.5; // known success
    assert!(!rights_itself(lo), "threshold bracket: {lo} should fail");
    assert!(rights_itself(hi), "threshold bracket: {hi} should succeed");
    for _ in 0..5 {
        let mid = 0.5 * (lo + hi);
        if rights_itself(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn left_up_set(table: &SweepTable) -> Vec<(u64, u64)> {
    let mut cells: Vec<(u64, u64)> = table
        .left_up_cells()
        .into_iter()
        .map(|(a, b)| (a.to_bits(), b.to_bits()))
        .collect();
    cells.sort_unstable();
    cells
}

/// Criterion 4 — the Fig.-3-style regime map on a 5x5 grid: egoistic
/// dominance corners, sub-threshold failure, and strict enlargement of the
/// left pendulum's upright region under the altruistic right agent.
#[test]
fn criterion_4_pendulum_regime_map() {
    let _slot = heavy_slot();
    let started = Instant::now();
    let (egoistic, altruistic) = sweeps();

    for cell in egoistic.cells.iter().chain(&altruistic.cells) {
        assert!(
            cell.error.is_none(),
            "cell ({}, {}) failed: {:?}",
            cell.tau_left,
            cell.tau_right,
            cell.error
        );
    }

    // (a) strongly asymmetric corners: one strong agent dominates.
    let top = GRID[4];
    let bottom = GRID[0];
    assert_eq!(
        egoistic.cell(top, bottom).unwrap().outcome,
        Some(OutcomeLabel::LeftUp),
        "egoistic ({top}, {bottom}) should be LeftUp"
    );
    assert_eq!(
        egoistic.cell(bottom, top).unwrap().outcome,
        Some(OutcomeLabel::RightUp),
        "egoistic ({bottom}, {top}) should be RightUp"
    );

    // (b) both bounds under the bisected self-righting threshold: NeitherUp.
    let threshold = bisect_self_righting_threshold();
    let mut sub_threshold = 0;
    for cell in &egoistic.cells {
        if cell.tau_left < threshold && cell.tau_right < threshold {
            sub_threshold += 1;
            assert_eq!(
                cell.outcome,
                Some(OutcomeLabel::NeitherUp),
                "sub-threshold cell ({}, {}) reached {:?}",
                cell.tau_left,
                cell.tau_right,
                cell.outcome
            );
        }
    }
    assert!(
        sub_threshold >= 4,
        "threshold {threshold:.2} leaves only {sub_threshold} sub-threshold cells"
    );

    // (c) altruism strictly enlarges the left pendulum's upright region.
    let ego_up = left_up_set(egoistic);
    let alt_up = left_up_set(altruistic);
    for cell in &ego_up {
        assert!(
            alt_up.contains(cell),
            "cell ({}, {}) lost its left-up status under altruism",
            f64::from_bits(cell.0),
            f64::from_bits(cell.1)
        );
    }
    assert!(
        alt_up.len() > ego_up.len(),
        "altruism added no left-up cells (ego {} vs alt {})",
        ego_up.len(),
        alt_up.len()
    );

    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 30.0 * 60.0,
        "criterion 4 overran its 30 min budget: {elapsed:?}"
    );
    pass(
        "4 (pendulum regime map)",
        format!(
            "threshold {threshold:.2} N·m, left-up {} -> {} cells, {:.1?}",
            ego_up.len(),
            alt_up.len(),
            elapsed
        ),
    );
}

struct FlockArtifacts {
    passive: FlockStudy,
    egoistic: Vec<FlockStudy>,
}

fn flock_config(seed: u64) -> FlockConfig {
    FlockConfig {
        agents: FLOCK_AGENTS,
        accel_bound: FLOCK_ACCEL_BOUND,
        noise_seed: seed,
        ..FlockConfig::default()
    }
}

fn run_flock(seed: u64, policy: Policy) -> FlockStudy {
    let config = flock_config(seed);
    let assignment = PolicyAssignment::uniform(FLOCK_AGENTS, policy, 5).unwrap();
    let game = flock_game(&config, FLOCK_HORIZON, DEFAULT_NOISE_LEVEL).unwrap();
    let options = ControlOptions {
        sparsify: true,
        reuse_interference: false,
    };
    run_flock_study(
        &config,
        &assignment,
        FLOCK_HORIZON,
        FLOCK_STEPS,
        &game,
        &options,
        &[],
    )
    .unwrap()
}

fn generate_flock_artifacts() -> FlockArtifacts {
    FlockArtifacts {
        passive: run_flock(FLOCK_SEEDS[0], Policy::Passive),
        egoistic: FLOCK_SEEDS
            .iter()
            .map(|&seed| run_flock(seed, Policy::Egoistic))
            .collect(),
    }
}

static FLOCK: OnceLock<FlockArtifacts> = OnceLock::new();

fn flock_artifacts() -> &'static FlockArtifacts {
    FLOCK.get_or_init(generate_flock_artifacts)
}

fn time_mean(series: &[f64]) -> f64 {
    series.iter().sum::<f64>() / series.len() as f64
}

/// Criterion 5 — flock anti-consensus at N = 25, T = 2000: passive dynamics
/// order toward consensus, egoistic control suppresses it while sustaining
/// higher mean empowerment.
#[test]
fn criterion_5_flock_anti_consensus() {
    let _slot = heavy_slot();
    let started = Instant::now();
    let artifacts = flock_artifacts();

    let passive_op = *artifacts
        .passive
        .series
        .order_parameter
        .last()
        .expect("series nonempty");
    assert!(
        passive_op >= 0.9,
        "passive terminal order parameter {passive_op:.3} < 0.9"
    );

    let ego = &artifacts.egoistic[0];
    let ego_op = *ego.series.order_parameter.last().unwrap();
    assert!(
        ego_op <= 0.4,
        "egoistic terminal order parameter {ego_op:.3} > 0.4"
    );

    let passive_mean_e = time_mean(&artifacts.passive.series.mean_empowerment);
    let ego_mean_e = time_mean(&ego.series.mean_empowerment);
    assert!(
        ego_mean_e > passive_mean_e,
        "egoistic time-mean empowerment {ego_mean_e:.4} not above passive {passive_mean_e:.4}"
    );

    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 60.0 * 60.0,
        "criterion 5 overran its 60 min budget: {elapsed:?}"
    );
    pass(
        "5 (flock anti-consensus)",
        format!(
            "passive OP {passive_op:.3}, egoistic OP {ego_op:.3}, empowerment {ego_mean_e:.3} > {passive_mean_e:.3}, {elapsed:.1?}"
        ),
    );
}

/// Criterion 6 — final-heading bimodality of the egoistic runs: the top two
/// circular clusters sit (π ± 0.5) apart and hold ≥ 70% of agents, in at
/// least 3 of 5 seeds.
#[test]
fn criterion_6_flock_bimodality() {
    let _slot = heavy_slot();
    let artifacts = flock_artifacts();
    let mut detail = Vec::new();
    let mut hits = 0;
    for (seed, study) in FLOCK_SEEDS.iter().zip(&artifacts.egoistic) {
        let headings: Vec<f64> = study
            .episode
            .final_state
            .agents()
            .iter()
            .map(|a| a[2])
            .collect();
        let report = bimodality(&headings).unwrap();
        if report.is_bimodal() {
            hits += 1;
        }
        detail.push(format!(
            "seed {seed}: sep {:.2}, mass {:.2}",
            report.separation, report.mass_fraction
        ));
    }
    assert!(
        hits >= 3,
        "bimodality in only {hits}/5 seeds: {}",
        detail.join("; ")
    );
    pass("6 (flock bimodality)", format!("{hits}/5 seeds bimodal"));
}

fn write_all_artifacts(dir: &std::path::Path, sweeps: &(SweepTable, SweepTable), flock: &FlockArtifacts) {
    std::fs::create_dir_all(dir).unwrap();
    write_sweep_table(&dir.join("sweep_egoistic.csv"), &sweeps.0).unwrap();
    write_sweep_table(&dir.join("sweep_altruistic.csv"), &sweeps.1).unwrap();
    write_metric_series(&dir.join("flock_passive.csv"), &flock.passive.series).unwrap();
    write_trajectory(&dir.join("flock_passive_trajectory.csv"), &flock.passive.episode).unwrap();
    for (seed, study) in FLOCK_SEEDS.iter().zip(&flock.egoistic) {
        write_metric_series(&dir.join(format!("flock_ego_{seed}.csv")), &study.series).unwrap();
    }
}

/// Criterion 7 — determinism: every criterion's artifacts are byte-identical
/// across two runs with the same seeds. The cheap criteria are re-verified
/// in memory; the sweep and flock artifacts are regenerated from scratch and
/// compared as written bytes.
#[test]
fn criterion_7_determinism() {
    let _slot = heavy_slot();
    let started = Instant::now();

    // Water-filling and game solves: bit-identical matrices across reruns.
    let mut rng_a = SplitMix::new(0xC7);
    let mut rng_b = SplitMix::new(0xC7);
    for _ in 0..20 {
        let h_a = random_channel(&mut rng_a, 3, 3);
        let h_b = random_channel(&mut rng_b, 3, 3);
        let noise = NoiseCovariance::isotropic(3, 0.1).unwrap();
        let s_a = waterfill(&h_a, &noise, PowerBudget::new(1.5).unwrap()).unwrap();
        let s_b = waterfill(&h_b, &noise, PowerBudget::new(1.5).unwrap()).unwrap();
        assert_eq!(s_a.matrix(), s_b.matrix(), "waterfill is not bit-stable");
    }
    let (sens_a, config_a) = {
        let mut rng = SplitMix::new(0x77);
        random_game_instance(&mut rng, 3, 2, 3, 0.4)
    };
    let (sens_b, config_b) = {
        let mut rng = SplitMix::new(0x77);
        random_game_instance(&mut rng, 3, 2, 3, 0.4)
    };
    let report_a = solve_game(&sens_a, &config_a, None).unwrap();
    let report_b = solve_game(&sens_b, &config_b, None).unwrap();
    assert_eq!(report_a.empowerment, report_b.empowerment);
    for (a, b) in report_a.covariances.iter().zip(&report_b.covariances) {
        assert_eq!(a.matrix(), b.matrix());
    }

    // Sensitivity (parallel finite differences): bit-identical across calls.
    let pend = PendulumEnv::new(PendulumConfig::default()).unwrap();
    let state = JointState::new(vec![
        DVector::from_vec(vec![0.9, -0.4]),
        DVector::from_vec(vec![-0.2, 0.6]),
    ])
    .unwrap();
    let s1 = sensitivity(&pend, &state, 40).unwrap();
    let s2 = sensitivity(&pend, &state, 40).unwrap();
    for n in 0..2 {
        for m in 0..2 {
            assert_eq!(s1.block(n, m), s2.block(n, m));
        }
    }

    // Heavy artifacts: a full second generation must reproduce the first
    // byte for byte.
    let first = std::env::temp_dir().join(format!("empower_accept_a_{}", std::process::id()));
    let second = std::env::temp_dir().join(format!("empower_accept_b_{}", std::process::id()));
    write_all_artifacts(&first, sweeps(), flock_artifacts());
    let sweeps_again = generate_sweeps();
    let flock_again = generate_flock_artifacts();
    write_all_artifacts(&second, &sweeps_again, &flock_again);

    let mut names: Vec<String> = std::fs::read_dir(&first)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(!names.is_empty());
    for name in &names {
        let a = std::fs::read(first.join(name)).unwrap();
        let b = std::fs::read(second.join(name)).unwrap();
        assert_eq!(a, b, "artifact {name} differs between runs");
    }
    std::fs::remove_dir_all(&first).ok();
    std::fs::remove_dir_all(&second).ok();

    pass(
        "7 (determinism)",
        format!("{} artifacts byte-identical, {:.1?}", names.len(), started.elapsed()),
    );
}
