//! Environment abstraction, rollouts along the autonomous trajectory, and
//! numerical block Jacobians.
//!
//! [`sensitivity`] builds the block Jacobian of the horizon-`t` joint state
//! with respect to every agent's action sequence by central finite
//! differences around the zero-control trajectory: each scalar action
//! coordinate at each step is nudged by `±h`, the dynamics re-rolled, and the
//! final states differenced. Perturbed rollouts restart from the shared
//! autonomous prefix, so the cost is `N·t·d_u` rollouts of average length
//! `t/2`, all independent and evaluated in parallel.
//!
//! Stochastic environments must draw their noise from a cursor carried inside
//! [`JointState`]; every perturbed rollout then sees the identical noise
//! realization and the Jacobian is of the noise-conditioned map.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::SensitivityMatrix;

pub use crate::game::sensor_output;

/// Stacked per-agent states of the full system at one time.
///
/// `noise_cursor` addresses the environment's noise stream (flock heading
/// noise); deterministic environments leave it at zero.
#[derive(Clone, Debug, PartialEq)]
pub struct JointState {
    agents: Vec<DVector<f64>>,
    noise_cursor: u64,
}

impl JointState {
    /// Builds a joint state; all agents must share one state dimension.
    pub fn new(agents: Vec<DVector<f64>>) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::EmptyInput("joint state needs ≥ 1 agent"));
        }
        let dim = agents[0].len();
        if dim == 0 || agents.iter().any(|a| a.len() != dim) {
            return Err(Error::dims("per-agent state dimensions disagree"));
        }
        Ok(JointState {
            agents,
            noise_cursor: 0,
        })
    }

    pub fn with_noise_cursor(mut self, cursor: u64) -> Self {
        self.noise_cursor = cursor;
        self
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn state_dim(&self) -> usize {
        self.agents[0].len()
    }

    pub fn agent(&self, n: usize) -> &DVector<f64> {
        &self.agents[n]
    }

    pub fn agent_mut(&mut self, n: usize) -> &mut DVector<f64> {
        &mut self.agents[n]
    }

    pub fn agents(&self) -> &[DVector<f64>] {
        &self.agents
    }

    pub fn noise_cursor(&self) -> u64 {
        self.noise_cursor
    }

    pub fn set_noise_cursor(&mut self, cursor: u64) {
        self.noise_cursor = cursor;
    }

    pub fn is_finite(&self) -> bool {
        self.agents
            .iter()
            .all(|a| a.iter().all(|v| v.is_finite()))
    }

    /// Restriction to a subset of agents, keeping the noise cursor.
    pub fn select(&self, agents: &[usize]) -> Result<JointState> {
        let picked = agents
            .iter()
            .map(|&i| {
                self.agents
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::dims(format!("agent index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(JointState::new(picked)?.with_noise_cursor(self.noise_cursor))
    }
}

/// One control per agent at a single timestep.
#[derive(Clone, Debug, PartialEq)]
pub struct JointAction {
    agents: Vec<DVector<f64>>,
}

impl JointAction {
    pub fn new(agents: Vec<DVector<f64>>) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::EmptyInput("joint action needs ≥ 1 agent"));
        }
        let dim = agents[0].len();
        if agents.iter().any(|a| a.len() != dim) {
            return Err(Error::dims("per-agent action dimensions disagree"));
        }
        Ok(JointAction { agents })
    }

    pub fn zeros(num_agents: usize, action_dim: usize) -> Self {
        JointAction {
            agents: vec![DVector::zeros(action_dim); num_agents],
        }
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn action_dim(&self) -> usize {
        self.agents[0].len()
    }

    pub fn agent(&self, n: usize) -> &DVector<f64> {
        &self.agents[n]
    }

    pub fn agent_mut(&mut self, n: usize) -> &mut DVector<f64> {
        &mut self.agents[n]
    }
}

/// Per-agent action sequences over a planning horizon, flattened time-major
/// within each agent (step 0 first).
#[derive(Clone, Debug, PartialEq)]
pub struct ActionSequence {
    horizon: usize,
    action_dim: usize,
    seqs: Vec<DVector<f64>>,
}

impl ActionSequence {
    pub fn zeros(num_agents: usize, action_dim: usize, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be ≥ 1".into()));
        }
        if num_agents == 0 {
            return Err(Error::EmptyInput("action sequence needs ≥ 1 agent"));
        }
        Ok(ActionSequence {
            horizon,
            action_dim,
            seqs: vec![DVector::zeros(horizon * action_dim); num_agents],
        })
    }

    /// Packs per-step joint actions into flattened per-agent sequences.
    pub fn pack(steps: &[JointAction]) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::EmptyInput("action sequence needs ≥ 1 step"));
        }
        let num_agents = steps[0].num_agents();
        let action_dim = steps[0].action_dim();
        let horizon = steps.len();
        let mut out = Self::zeros(num_agents, action_dim, horizon)?;
        for (k, step) in steps.iter().enumerate() {
            if step.num_agents() != num_agents || step.action_dim() != action_dim {
                return Err(Error::dims("inconsistent step shapes while packing"));
            }
            for n in 0..num_agents {
                for j in 0..action_dim {
                    out.seqs[n][k * action_dim + j] = step.agent(n)[j];
                }
            }
        }
        Ok(out)
    }

    /// Unpacks back into one joint action per step.
    pub fn unpack(&self) -> Vec<JointAction> {
        (0..self.horizon)
            .map(|k| self.joint_action_at(k))
            .collect()
    }

    /// The joint action applied at step `k`.
    pub fn joint_action_at(&self, k: usize) -> JointAction {
        let agents = self
            .seqs
            .iter()
            .map(|seq| {
                DVector::from_fn(self.action_dim, |j, _| seq[k * self.action_dim + j])
            })
            .collect();
        JointAction { agents }
    }

    pub fn set(&mut self, agent: usize, step: usize, coord: usize, value: f64) {
        self.seqs[agent][step * self.action_dim + coord] = value;
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn num_agents(&self) -> usize {
        self.seqs.len()
    }

    /// Flattened sequence of one agent.
    pub fn per_agent(&self, agent: usize) -> &DVector<f64> {
        &self.seqs[agent]
    }
}

/// Discrete-time coupled dynamics `x' = f(x, u)`.
///
/// `step` is the raw dynamics map: it must be deterministic given state,
/// action, and the noise cursor in the state, and must not enforce actuation
/// bounds (finite-difference probes exceed them by design; bound checking
/// belongs to the public per-environment step operations). Implementations
/// must be usable concurrently — the perturbation rollouts of
/// [`sensitivity`] run in parallel from a shared initial state.
pub trait EnvironmentModel: Sync {
    fn num_agents(&self) -> usize;
    fn state_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    /// Timestep in seconds.
    fn dt(&self) -> f64;
    /// Per-coordinate actuation bound of one agent.
    fn action_bound(&self, agent: usize) -> f64;

    /// One step of the raw dynamics, written into `out` (same shape as
    /// `state`). This is the hot path of finite-difference linearization, so
    /// implementations should not allocate.
    fn step_into(&self, state: &JointState, action: &JointAction, out: &mut JointState);

    /// Allocating convenience wrapper around [`Self::step_into`].
    fn step(&self, state: &JointState, action: &JointAction) -> JointState {
        let mut out = state.clone();
        self.step_into(state, action, &mut out);
        out
    }

    /// Per-agent difference `a − b` of two states produced by nearby
    /// rollouts. Environments with periodic coordinates override this so the
    /// difference never crosses a wrapping seam.
    fn state_difference(&self, a: &JointState, b: &JointState) -> Vec<DVector<f64>> {
        a.agents()
            .iter()
            .zip(b.agents())
            .map(|(x, y)| x - y)
            .collect()
    }

    /// Interaction-local agent sets (each including self), if the
    /// environment has a meaningful locality structure.
    fn neighborhoods(&self, _state: &JointState) -> Option<Vec<Vec<usize>>> {
        None
    }

    /// A sub-environment over a subset of agents, if the dynamics restrict.
    fn restrict(&self, _agents: &[usize]) -> Option<Box<dyn EnvironmentModel>> {
        None
    }
}

fn ensure_finite(state: &JointState, step: usize) -> Result<()> {
    if state.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFiniteState { step })
    }
}

/// Applies `env.step` down an action sequence and returns `[x_1, …, x_t]`.
pub fn rollout<E: EnvironmentModel + ?Sized>(
    env: &E,
    x0: &JointState,
    actions: &ActionSequence,
) -> Result<Vec<JointState>> {
    let mut states = Vec::with_capacity(actions.horizon());
    let mut x = x0.clone();
    let mut next = x0.clone();
    for k in 0..actions.horizon() {
        env.step_into(&x, &actions.joint_action_at(k), &mut next);
        ensure_finite(&next, k + 1)?;
        states.push(next.clone());
        std::mem::swap(&mut x, &mut next);
    }
    Ok(states)
}

/// Rolls `remaining` zero-action steps after applying `first` at the front.
/// Ping-pongs two scratch buffers so the loop never allocates.
fn roll_tail<E: EnvironmentModel + ?Sized>(
    env: &E,
    start: &JointState,
    first: &JointAction,
    remaining: usize,
    step_offset: usize,
    zero: &JointAction,
) -> Result<JointState> {
    let mut x = start.clone();
    let mut next = start.clone();
    env.step_into(start, first, &mut next);
    ensure_finite(&next, step_offset + 1)?;
    std::mem::swap(&mut x, &mut next);
    for i in 0..remaining {
        env.step_into(&x, zero, &mut next);
        ensure_finite(&next, step_offset + 2 + i)?;
        std::mem::swap(&mut x, &mut next);
    }
    Ok(x)
}

/// Default finite-difference step for an agent: `1e-5 · max(1, bound)`.
pub fn default_fd_step(bound: f64) -> f64 {
    1e-5 * bound.max(1.0)
}

/// Block Jacobian of the horizon-`t` joint state with respect to all agents'
/// action sequences, by central differences around the zero-control
/// trajectory. See [`sensitivity_with_step`] for a configurable step size.
///
/// ```
/// use empower::env::linear::LinearEnv;
/// use empower::linearize::{sensitivity, JointState};
/// use nalgebra::{DMatrix, DVector};
///
/// // Linear dynamics have exact Jacobians [A⁴B … B] to compare against.
/// let a = DMatrix::from_row_slice(2, 2, &[0.9, 0.1, 0.0, 0.8]);
/// let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.3, 1.0]);
/// let env = LinearEnv::new(a, b, 2, 1, 1, 0.1, 1.0).unwrap();
/// let x0 = JointState::new(vec![
///     DVector::from_vec(vec![0.4]),
///     DVector::from_vec(vec![-0.2]),
/// ]).unwrap();
///
/// let numeric = sensitivity(&env, &x0, 5).unwrap();
/// let analytic = env.analytic_sensitivity(5).unwrap();
/// for n in 0..2 {
///     for m in 0..2 {
///         assert!((numeric.block(n, m) - analytic.block(n, m)).norm() < 1e-8);
///     }
/// }
/// ```
pub fn sensitivity<E: EnvironmentModel + ?Sized>(
    env: &E,
    x0: &JointState,
    horizon: usize,
) -> Result<SensitivityMatrix> {
    sensitivity_with_step(env, x0, horizon, None)
}

/// As [`sensitivity`], with an explicit finite-difference step `h` (used by
/// step-halving consistency checks). `None` selects the per-agent default.
pub fn sensitivity_with_step<E: EnvironmentModel + ?Sized>(
    env: &E,
    x0: &JointState,
    horizon: usize,
    step_size: Option<f64>,
) -> Result<SensitivityMatrix> {
    if horizon == 0 {
        return Err(Error::InvalidConfig("horizon must be ≥ 1".into()));
    }
    let n_agents = env.num_agents();
    let d_x = env.state_dim();
    let d_u = env.action_dim();
    if x0.num_agents() != n_agents || x0.state_dim() != d_x {
        return Err(Error::dims(format!(
            "initial state is {} agents × {}, environment wants {} × {}",
            x0.num_agents(),
            x0.state_dim(),
            n_agents,
            d_x
        )));
    }

    // Shared autonomous prefix [x_0 … x_{t-1}]: a perturbation at step k only
    // changes the tail, so its rollout restarts from prefix[k].
    let zero_actions = ActionSequence::zeros(n_agents, d_u, horizon)?;
    let mut prefix = Vec::with_capacity(horizon);
    prefix.push(x0.clone());
    let tail = rollout(env, x0, &zero_actions)?;
    prefix.extend(tail.iter().take(horizon - 1).cloned());

    // One finite-difference column per (source agent, step, coordinate).
    let jobs: Vec<(usize, usize, usize)> = (0..n_agents)
        .flat_map(|m| (0..horizon).flat_map(move |k| (0..d_u).map(move |j| (m, k, j))))
        .collect();

    let columns: Vec<Vec<DVector<f64>>> = jobs
        .par_iter()
        .map(|&(m, k, j)| {
            let h = step_size.unwrap_or_else(|| default_fd_step(env.action_bound(m)));
            let zero = JointAction::zeros(n_agents, d_u);
            let mut plus_action = JointAction::zeros(n_agents, d_u);
            plus_action.agent_mut(m)[j] = h;
            let mut minus_action = JointAction::zeros(n_agents, d_u);
            minus_action.agent_mut(m)[j] = -h;
            let remaining = horizon - 1 - k;
            let plus = roll_tail(env, &prefix[k], &plus_action, remaining, k, &zero)?;
            let minus = roll_tail(env, &prefix[k], &minus_action, remaining, k, &zero)?;
            let diffs = env.state_difference(&plus, &minus);
            Ok(diffs.into_iter().map(|d| d / (2.0 * h)).collect())
        })
        .collect::<Result<Vec<_>>>()?;

    let mut blocks: Vec<Vec<nalgebra::DMatrix<f64>>> = (0..n_agents)
        .map(|_| {
            (0..n_agents)
                .map(|_| nalgebra::DMatrix::zeros(d_x, horizon * d_u))
                .collect()
        })
        .collect();
    for (&(m, k, j), cols) in jobs.iter().zip(&columns) {
        for (n, col) in cols.iter().enumerate() {
            blocks[n][m].set_column(k * d_u + j, col);
        }
    }
    SensitivityMatrix::new(blocks)
}

/// Zeroes every coupling block `(n, m)` with `m` outside `n`'s neighbor set.
/// Diagonal blocks are never zeroed.
///
/// ```
/// use empower::env::pendulum::{PendulumConfig, PendulumEnv};
/// use empower::linearize::sensitivity;
///
/// // Decoupled pendulums already have exactly zero coupling blocks.
/// let config = PendulumConfig { stiffness: 0.0, ..PendulumConfig::default() };
/// let env = PendulumEnv::new(config.clone()).unwrap();
/// let sens = sensitivity(&env, &config.hanging_rest(), 10).unwrap();
/// assert!(sens.block(0, 1).norm() < 1e-9);
/// assert!(sens.block(1, 0).norm() < 1e-9);
/// ```
pub fn sparsify(
    sensitivity: &SensitivityMatrix,
    neighbor_sets: &[Vec<usize>],
) -> Result<SensitivityMatrix> {
    let n = sensitivity.num_agents();
    if neighbor_sets.len() != n {
        return Err(Error::dims(format!(
            "{} neighbor sets for {} agents",
            neighbor_sets.len(),
            n
        )));
    }
    let mut out = sensitivity.clone();
    for agent in 0..n {
        for m in 0..n {
            if m != agent && !neighbor_sets[agent].contains(&m) {
                out.block_mut(agent, m).fill(0.0);
            }
        }
    }
    Ok(out)
}
