//! Empowerment-maximizing control: egoistic and altruistic policies over a
//! candidate action grid, and the online loop that alternates linearization,
//! game solving, action selection, and a dynamics step.
//!
//! Each non-passive agent scores every candidate `u` on a uniform grid over
//! its actuation range with everyone else held at zero: step the dynamics to
//! `x⁺ = f(x, u)`, linearize there, solve the probing game, and read off the
//! target agent's empowerment. The argmax is the action. By default each
//! candidate gets its own linearization and game solve; optionally the
//! current step's interference covariances are reused, and on environments
//! with locality structure (the flock) the candidate game restricts to the
//! agent's interaction neighborhood.

use nalgebra::DVector;

use crate::channel::{capacity, waterfill, ChannelMatrix, InputCovariance};
use crate::env::pendulum::OutcomeLabel;
use crate::error::{Error, Result};
use crate::game::{effective_noise, solve_game, GameConfig};
use crate::linearize::{sensitivity, sparsify, EnvironmentModel, JointAction, JointState};

/// What an agent maximizes when it is its turn to act.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Policy {
    /// Maximize own empowerment.
    Egoistic,
    /// Maximize the empowerment of another agent.
    Altruistic(usize),
    /// Always act zero (baseline dynamics).
    Passive,
}

/// Per-agent policies plus the candidate grid resolution `M` (points per
/// action coordinate).
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyAssignment {
    pub policies: Vec<Policy>,
    pub candidates: usize,
}

impl PolicyAssignment {
    pub fn new(policies: Vec<Policy>, candidates: usize) -> Result<Self> {
        if policies.is_empty() {
            return Err(Error::EmptyInput("assignment needs ≥ 1 agent"));
        }
        if candidates < 2 {
            return Err(Error::InvalidConfig(format!(
                "candidate grid needs M ≥ 2, got {candidates}"
            )));
        }
        for (agent, policy) in policies.iter().enumerate() {
            if let Policy::Altruistic(target) = policy {
                if *target == agent {
                    return Err(Error::InvalidConfig(format!(
                        "agent {agent} cannot be altruistic toward itself"
                    )));
                }
                if *target >= policies.len() {
                    return Err(Error::InvalidConfig(format!(
                        "agent {agent} targets out-of-range agent {target}"
                    )));
                }
            }
        }
        Ok(PolicyAssignment {
            policies,
            candidates,
        })
    }

    /// The same policy for every agent.
    pub fn uniform(agents: usize, policy: Policy, candidates: usize) -> Result<Self> {
        Self::new(vec![policy; agents], candidates)
    }

    pub fn num_agents(&self) -> usize {
        self.policies.len()
    }
}

/// Evaluation strategy for candidate actions.
#[derive(Clone, Copy, Debug, Default)]
pub struct ControlOptions {
    /// Restrict candidate evaluation to interaction neighborhoods and
    /// sparsify the logged per-step game, on environments that expose
    /// locality. No effect elsewhere.
    pub sparsify: bool,
    /// Reuse the current step's interference covariances instead of
    /// re-solving the game at every candidate (cheaper, approximate).
    pub reuse_interference: bool,
}

/// `M` equally spaced scalars over `[-bound, +bound]`, endpoints included;
/// contains 0 whenever `M` is odd.
///
/// ```
/// use empower::control::candidate_actions;
///
/// assert_eq!(candidate_actions(1.0, 3), vec![-1.0, 0.0, 1.0]);
/// assert_eq!(candidate_actions(2.0, 5), vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
/// assert_eq!(candidate_actions(0.0, 3), vec![0.0, 0.0, 0.0]);
/// ```
pub fn candidate_actions(bound: f64, m: usize) -> Vec<f64> {
    if bound == 0.0 {
        return vec![0.0; m];
    }
    (0..m)
        .map(|i| -bound + 2.0 * bound * i as f64 / (m - 1) as f64)
        .collect()
}

/// Tolerance under which two candidate values count as tied. Empowerment
/// differences this small sit below the accuracy of the finite-difference
/// linearization itself, so treating them as ties keeps the tie-break rule
/// meaningful on symmetric states.
const TIE_TOLERANCE: f64 = 1e-8;

/// Candidate vectors for one agent in preference order: ascending |u|, and
/// among equal magnitudes the more negative components first. Visiting in
/// this order with strictly-improving replacement realizes the tie-break
/// "smaller |u|, then toward negative u".
fn candidate_grid(bound: f64, m: usize, action_dim: usize) -> Vec<DVector<f64>> {
    let scalars = candidate_actions(bound, m);
    let mut grid: Vec<DVector<f64>> = Vec::with_capacity(scalars.len().pow(action_dim as u32));
    let mut indices = vec![0usize; action_dim];
    loop {
        grid.push(DVector::from_fn(action_dim, |j, _| scalars[indices[j]]));
        let mut carry = 0;
        while carry < action_dim {
            indices[carry] += 1;
            if indices[carry] < scalars.len() {
                break;
            }
            indices[carry] = 0;
            carry += 1;
        }
        if carry == action_dim {
            break;
        }
    }
    grid.sort_by(|a, b| {
        let na = a.norm();
        let nb = b.norm();
        na.partial_cmp(&nb)
            .unwrap()
            .then_with(|| a.iter().partial_cmp(b.iter()).unwrap())
    });
    grid
}

fn policy_target(agent: usize, policy: Policy) -> Result<usize> {
    match policy {
        Policy::Egoistic => Ok(agent),
        Policy::Altruistic(target) => Ok(target),
        Policy::Passive => Err(Error::InvalidConfig(format!(
            "select_action called for passive agent {agent}"
        ))),
    }
}

/// Scores one candidate next-state: linearize, solve (or reuse), and return
/// the target agent's empowerment.
fn evaluate_candidate<E: EnvironmentModel + ?Sized>(
    env: &E,
    x_plus: &JointState,
    agent: usize,
    target: usize,
    horizon: usize,
    game: &GameConfig,
    options: &ControlOptions,
    step_covariances: Option<&[InputCovariance]>,
) -> Result<f64> {
    if options.sparsify {
        if let Some(neighborhoods) = env.neighborhoods(x_plus) {
            // Local sub-game over the agent's interaction neighborhood plus
            // the target (the target may sit outside the disk under an
            // altruistic policy).
            let mut local = neighborhoods[agent].clone();
            if !local.contains(&target) {
                local.push(target);
            }
            local.sort_unstable();
            if let Some(sub_env) = env.restrict(&local) {
                let sub_state = x_plus.select(&local)?;
                let sub_game = game.select(&local)?;
                let sens = sensitivity(sub_env.as_ref(), &sub_state, horizon)?;
                let report = solve_game(&sens, &sub_game, None)?;
                let local_target = local
                    .iter()
                    .position(|&i| i == target)
                    .expect("target inserted above");
                return Ok(report.empowerment[local_target]);
            }
        }
    }

    let sens = sensitivity(env, x_plus, horizon)?;
    if let Some(covs) = step_covariances {
        // Cheap variant: keep everyone else's probing fixed at the current
        // step's equilibrium, best-respond only for the target.
        let noise = effective_noise(target, &sens, covs, game)?;
        let direct = game.sensors[target].matrix() * sens.block(target, target);
        let channel = ChannelMatrix::new(direct)?;
        let own = waterfill(&channel, &noise, game.budgets[target])?;
        return capacity(&channel, &own, &noise);
    }
    let report = solve_game(&sens, game, None)?;
    Ok(report.empowerment[target])
}

/// Empowerment-maximizing action for one agent: argmax over its candidate
/// grid of the (egoistic or altruistic) empowerment at the candidate next
/// state, all other agents held at zero. Returns the action and a flag that
/// is set when every candidate failed to evaluate (the action is then zero).
pub fn select_action<E: EnvironmentModel + ?Sized>(
    env: &E,
    state: &JointState,
    agent: usize,
    assignment: &PolicyAssignment,
    horizon: usize,
    game: &GameConfig,
    options: &ControlOptions,
    step_covariances: Option<&[InputCovariance]>,
) -> Result<(DVector<f64>, bool)> {
    let target = policy_target(agent, assignment.policies[agent])?;
    let grid = candidate_grid(env.action_bound(agent), assignment.candidates, env.action_dim());

    let mut best: Option<(f64, DVector<f64>)> = None;
    for candidate in grid {
        let mut joint = JointAction::zeros(env.num_agents(), env.action_dim());
        joint.agent_mut(agent).copy_from(&candidate);
        let x_plus = env.step(state, &joint);
        if !x_plus.is_finite() {
            continue;
        }
        let value = match evaluate_candidate(
            env,
            &x_plus,
            agent,
            target,
            horizon,
            game,
            options,
            step_covariances,
        ) {
            Ok(v) => v,
            Err(Error::NonFiniteState { .. }) => continue,
            Err(other) => return Err(other),
        };
        let improves = match &best {
            None => true,
            Some((incumbent, _)) => value > incumbent + TIE_TOLERANCE * (1.0 + incumbent.abs()),
        };
        if improves {
            best = Some((value, candidate));
        }
    }

    match best {
        Some((_, action)) => Ok((action, false)),
        None => Ok((DVector::zeros(env.action_dim()), true)),
    }
}

/// One logged step of an episode.
#[derive(Clone, Debug)]
pub struct StepRecord {
    /// Time at the start of the step, seconds.
    pub time: f64,
    /// State the step started from.
    pub state: JointState,
    /// Joint action applied.
    pub action: JointAction,
    /// Per-agent empowerment of the step's probing game.
    pub empowerment: Vec<f64>,
    pub sweeps_used: usize,
    pub converged: bool,
    pub residual: f64,
    /// Agents whose action selection failed on every candidate this step.
    pub flagged: Vec<usize>,
}

/// Full episode log: per-step records plus the final state. `error` is set
/// when the dynamics blew up and the record is partial. `config_snapshot`
/// is filled by the caller that knows the environment's serialized form.
#[derive(Clone, Debug)]
pub struct EpisodeRecord {
    pub steps: Vec<StepRecord>,
    pub final_state: JointState,
    pub outcome: Option<OutcomeLabel>,
    pub config_snapshot: Option<String>,
    pub error: Option<String>,
}

impl EpisodeRecord {
    /// Mean empowerment across agents at each step.
    pub fn mean_empowerment(&self) -> Vec<f64> {
        self.steps
            .iter()
            .map(|s| s.empowerment.iter().sum::<f64>() / s.empowerment.len() as f64)
            .collect()
    }

    /// Per-agent empowerment at the final logged step.
    pub fn final_empowerment(&self) -> Option<&[f64]> {
        self.steps.last().map(|s| s.empowerment.as_slice())
    }
}

/// The per-step probing game of the online loop. Dense path: linearize the
/// full system (sparsified by neighbor sets when requested) and solve one
/// joint game. Local path (locality-aware environments with `sparsify` on):
/// solve each agent's game on its interaction neighborhood, which keeps the
/// per-step cost linear in the population; diagnostics aggregate as the
/// worst case over the sub-games.
fn step_game<E: EnvironmentModel + ?Sized>(
    env: &E,
    state: &JointState,
    horizon: usize,
    game: &GameConfig,
    options: &ControlOptions,
) -> Result<crate::game::EmpowermentReport> {
    if options.sparsify {
        if let Some(neighborhoods) = env.neighborhoods(state) {
            if env.restrict(&[0]).is_some() {
                let n = env.num_agents();
                let mut empowerment = vec![0.0; n];
                let mut covariances = Vec::with_capacity(n);
                let mut sweeps_used = 0;
                let mut converged = true;
                let mut final_residual = 0.0_f64;
                for agent in 0..n {
                    let local = &neighborhoods[agent];
                    let sub_env = env.restrict(local).ok_or_else(|| {
                        Error::InvalidConfig("environment lost its restriction".into())
                    })?;
                    let sub_state = state.select(local)?;
                    let sub_game = game.select(local)?;
                    let sens = sensitivity(sub_env.as_ref(), &sub_state, horizon)?;
                    let report = solve_game(&sens, &sub_game, None)?;
                    let me = local
                        .iter()
                        .position(|&i| i == agent)
                        .expect("neighborhoods include self");
                    empowerment[agent] = report.empowerment[me];
                    covariances.push(report.covariances[me].clone());
                    sweeps_used = sweeps_used.max(report.sweeps_used);
                    converged &= report.converged;
                    final_residual = final_residual.max(report.final_residual);
                }
                return Ok(crate::game::EmpowermentReport {
                    covariances,
                    empowerment,
                    sweeps_used,
                    converged,
                    final_residual,
                });
            }
            let sens = sparsify(&sensitivity(env, state, horizon)?, &neighborhoods)?;
            return solve_game(&sens, game, None);
        }
    }
    let sens = sensitivity(env, state, horizon)?;
    solve_game(&sens, game, None)
}

/// Runs the online loop for `steps` steps: linearize at the current state,
/// solve the probing game (logged), let every non-passive agent pick its
/// action with the others at zero, step the joint dynamics, repeat.
/// A non-finite state aborts with a partial record and the error flag set.
///
/// ```
/// use empower::control::{run_episode, ControlOptions, Policy, PolicyAssignment};
/// use empower::env::pendulum::{PendulumConfig, PendulumEnv};
/// use empower::harness::pendulum_game;
///
/// // A passive episode at exact hanging rest stays at rest.
/// let config = PendulumConfig::default();
/// let env = PendulumEnv::new(config.clone()).unwrap();
/// let game = pendulum_game(&config, 10, 1e-2).unwrap();
/// let assignment = PolicyAssignment::uniform(2, Policy::Passive, 3).unwrap();
///
/// let record = run_episode(
///     &env,
///     &config.hanging_rest(),
///     &assignment,
///     10,
///     5,
///     &game,
///     &ControlOptions::default(),
/// ).unwrap();
/// assert!(record.error.is_none());
/// assert!(record.final_state.agent(0)[0].abs() < 1e-12);
/// ```
pub fn run_episode<E: EnvironmentModel + ?Sized>(
    env: &E,
    x0: &JointState,
    assignment: &PolicyAssignment,
    horizon: usize,
    steps: usize,
    game: &GameConfig,
    options: &ControlOptions,
) -> Result<EpisodeRecord> {
    if steps == 0 {
        return Err(Error::InvalidConfig("episode needs ≥ 1 step".into()));
    }
    if assignment.num_agents() != env.num_agents() || game.num_agents() != env.num_agents() {
        return Err(Error::dims(format!(
            "agents disagree: env {}, assignment {}, game {}",
            env.num_agents(),
            assignment.num_agents(),
            game.num_agents()
        )));
    }

    let mut record = EpisodeRecord {
        steps: Vec::with_capacity(steps),
        final_state: x0.clone(),
        outcome: None,
        config_snapshot: None,
        error: None,
    };
    let mut state = x0.clone();

    for k in 0..steps {
        let report = match step_game(env, &state, horizon, game, options) {
            Ok(r) => r,
            Err(Error::NonFiniteState { step }) => {
                record.error = Some(format!("non-finite state while linearizing step {k} (+{step})"));
                break;
            }
            Err(other) => return Err(other),
        };

        let mut action = JointAction::zeros(env.num_agents(), env.action_dim());
        let mut flagged = Vec::new();
        for agent in 0..env.num_agents() {
            if assignment.policies[agent] == Policy::Passive {
                continue;
            }
            let step_covs = options
                .reuse_interference
                .then_some(report.covariances.as_slice());
            let (chosen, failed) = select_action(
                env, &state, agent, assignment, horizon, game, options, step_covs,
            )?;
            if failed {
                flagged.push(agent);
            }
            action.agent_mut(agent).copy_from(&chosen);
        }

        let next = env.step(&state, &action);
        record.steps.push(StepRecord {
            time: k as f64 * env.dt(),
            state: state.clone(),
            action,
            empowerment: report.empowerment,
            sweeps_used: report.sweeps_used,
            converged: report.converged,
            residual: report.final_residual,
            flagged,
        });
        if !next.is_finite() {
            record.error = Some(format!("non-finite state after applying step {k}"));
            record.final_state = state;
            return Ok(record);
        }
        state = next;
    }
    record.final_state = state;
    Ok(record)
}
