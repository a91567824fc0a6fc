//! The N-agent probing game: iterative water-filling to a Nash equilibrium.
//!
//! Coupled linearized dynamics make each agent's sensed future a Gaussian
//! channel in which every other agent's probing shows up as structured
//! interference. Agent `n`'s effective noise is
//!
//! ```text
//! Σ(n) = Sz(n) + Σ_{m≠n} C(n) F(n,m) S(m) F(n,m)ᵀ C(n)ᵀ
//! ```
//!
//! and its best response is the single-user water-filling solution against
//! that noise. [`solve_game`] sweeps best responses in agent order
//! (Gauss–Seidel) until no covariance moves more than the tolerance in
//! Frobenius norm, then scores every agent's empowerment at the fixed point.
//!
//! ```
//! use empower::game::{solve_game, GameConfig, SensitivityMatrix, SensorMatrix};
//! use empower::channel::{NoiseCovariance, PowerBudget};
//! use nalgebra::DMatrix;
//!
//! // Two decoupled scalar agents: the game is two independent channels.
//! let eye = DMatrix::identity(1, 1);
//! let sens = SensitivityMatrix::new(vec![
//!     vec![eye.clone(), DMatrix::zeros(1, 1)],
//!     vec![DMatrix::zeros(1, 1), eye.clone()],
//! ]).unwrap();
//! let config = GameConfig::uniform(
//!     2,
//!     PowerBudget::new(3.0).unwrap(),
//!     NoiseCovariance::isotropic(1, 1.0).unwrap(),
//!     SensorMatrix::identity(1),
//! ).unwrap();
//!
//! let report = solve_game(&sens, &config, None).unwrap();
//! assert!(report.converged);
//! // Scalar Shannon rate: ½·ln(1 + P/σ²) with P = 3, σ² = 1.
//! assert!((report.empowerment[0] - 0.5 * 4.0_f64.ln()).abs() < 1e-9);
//! ```

use nalgebra::{DMatrix, DVector};

use crate::channel::{
    capacity, waterfill, ChannelMatrix, InputCovariance, NoiseCovariance, PowerBudget,
};
use crate::error::{Error, Result};

/// Block Jacobian of the horizon-t joint state with respect to every agent's
/// action sequence. Block `(n, m)` has shape `d_x × (t·d_u)` of agent `m` and
/// holds the response of agent `n`'s state to agent `m`'s actions.
#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityMatrix {
    blocks: Vec<Vec<DMatrix<f64>>>,
    state_dim: usize,
    input_cols: Vec<usize>,
}

impl SensitivityMatrix {
    /// Validates the N×N grid: every block finite, all rows equal to the
    /// shared per-agent state dimension, column counts consistent per source
    /// agent.
    pub fn new(blocks: Vec<Vec<DMatrix<f64>>>) -> Result<Self> {
        let n = blocks.len();
        if n == 0 {
            return Err(Error::EmptyInput("sensitivity matrix needs ≥ 1 agent"));
        }
        if blocks.iter().any(|row| row.len() != n) {
            return Err(Error::dims("sensitivity block grid is not square"));
        }
        let state_dim = blocks[0][0].nrows();
        let input_cols: Vec<usize> = (0..n).map(|m| blocks[0][m].ncols()).collect();
        for (i, row) in blocks.iter().enumerate() {
            for (j, b) in row.iter().enumerate() {
                if b.nrows() != state_dim {
                    return Err(Error::dims(format!(
                        "block ({i},{j}) has {} rows, expected {state_dim}",
                        b.nrows()
                    )));
                }
                if b.ncols() != input_cols[j] {
                    return Err(Error::dims(format!(
                        "block ({i},{j}) has {} cols, expected {}",
                        b.ncols(),
                        input_cols[j]
                    )));
                }
                if b.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidConfig(format!(
                        "block ({i},{j}) has non-finite entries"
                    )));
                }
            }
        }
        Ok(SensitivityMatrix {
            blocks,
            state_dim,
            input_cols,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.blocks.len()
    }

    /// Shared per-agent state dimension (block row count).
    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    /// Flattened action-sequence length of source agent `m`.
    pub fn input_cols(&self, m: usize) -> usize {
        self.input_cols[m]
    }

    pub fn block(&self, n: usize, m: usize) -> &DMatrix<f64> {
        &self.blocks[n][m]
    }

    pub(crate) fn block_mut(&mut self, n: usize, m: usize) -> &mut DMatrix<f64> {
        &mut self.blocks[n][m]
    }
}

/// Linear sensor selecting or combining state components; empowerment is
/// measured in its output space.
#[derive(Clone, Debug, PartialEq)]
pub struct SensorMatrix {
    entries: DMatrix<f64>,
}

impl SensorMatrix {
    /// Validates: finite entries, `1 ≤ d_y ≤ d_x`.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.nrows() > entries.ncols() {
            return Err(Error::dims(format!(
                "sensor must have 1 ≤ rows ≤ cols, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("sensor has non-finite entries".into()));
        }
        Ok(SensorMatrix { entries })
    }

    /// Full-state sensor.
    pub fn identity(dim: usize) -> Self {
        SensorMatrix {
            entries: DMatrix::identity(dim, dim),
        }
    }

    /// Single-row sensor selecting one state coordinate.
    pub fn select_coordinate(state_dim: usize, coordinate: usize) -> Result<Self> {
        if coordinate >= state_dim {
            return Err(Error::dims(format!(
                "coordinate {coordinate} out of range for state dim {state_dim}"
            )));
        }
        let mut row = DMatrix::zeros(1, state_dim);
        row[(0, coordinate)] = 1.0;
        Ok(SensorMatrix { entries: row })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn output_dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn state_dim(&self) -> usize {
        self.entries.ncols()
    }
}

/// Per-agent game data plus the stopping rule of the sweep iteration.
#[derive(Clone, Debug)]
pub struct GameConfig {
    pub budgets: Vec<PowerBudget>,
    pub sensor_noise: Vec<NoiseCovariance>,
    pub sensors: Vec<SensorMatrix>,
    /// Convergence tolerance on the max per-agent Frobenius-norm change.
    pub tolerance: f64,
    pub max_sweeps: usize,
}

/// Default stopping tolerance for [`solve_game`].
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
/// Default sweep cap for [`solve_game`].
pub const DEFAULT_MAX_SWEEPS: usize = 200;

impl GameConfig {
    pub fn new(
        budgets: Vec<PowerBudget>,
        sensor_noise: Vec<NoiseCovariance>,
        sensors: Vec<SensorMatrix>,
        tolerance: f64,
        max_sweeps: usize,
    ) -> Result<Self> {
        let n = budgets.len();
        if n == 0 {
            return Err(Error::EmptyInput("game config needs ≥ 1 agent"));
        }
        if sensor_noise.len() != n || sensors.len() != n {
            return Err(Error::dims(format!(
                "per-agent field lengths disagree: {n} budgets, {} noises, {} sensors",
                sensor_noise.len(),
                sensors.len()
            )));
        }
        for (i, (noise, sensor)) in sensor_noise.iter().zip(&sensors).enumerate() {
            if noise.dim() != sensor.output_dim() {
                return Err(Error::dims(format!(
                    "agent {i}: sensor output dim {} vs noise dim {}",
                    sensor.output_dim(),
                    noise.dim()
                )));
            }
        }
        if !(tolerance > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tolerance must be positive, got {tolerance}"
            )));
        }
        if max_sweeps == 0 {
            return Err(Error::InvalidConfig("max_sweeps must be ≥ 1".into()));
        }
        Ok(GameConfig {
            budgets,
            sensor_noise,
            sensors,
            tolerance,
            max_sweeps,
        })
    }

    /// Same budget, noise, and sensor for every agent.
    pub fn uniform(
        agents: usize,
        budget: PowerBudget,
        noise: NoiseCovariance,
        sensor: SensorMatrix,
    ) -> Result<Self> {
        Self::new(
            vec![budget; agents],
            vec![noise; agents],
            vec![sensor; agents],
            DEFAULT_TOLERANCE,
            DEFAULT_MAX_SWEEPS,
        )
    }

    pub fn num_agents(&self) -> usize {
        self.budgets.len()
    }

    /// Restriction to a subset of agents (local sub-games).
    pub fn select(&self, agents: &[usize]) -> Result<GameConfig> {
        let pick = |idx: &usize| -> Result<usize> {
            if *idx < self.num_agents() {
                Ok(*idx)
            } else {
                Err(Error::dims(format!("agent index {idx} out of range")))
            }
        };
        let mut budgets = Vec::with_capacity(agents.len());
        let mut noise = Vec::with_capacity(agents.len());
        let mut sensors = Vec::with_capacity(agents.len());
        for a in agents {
            let a = pick(a)?;
            budgets.push(self.budgets[a]);
            noise.push(self.sensor_noise[a].clone());
            sensors.push(self.sensors[a].clone());
        }
        GameConfig::new(budgets, noise, sensors, self.tolerance, self.max_sweeps)
    }

    fn check_against(&self, sensitivity: &SensitivityMatrix) -> Result<()> {
        if self.num_agents() != sensitivity.num_agents() {
            return Err(Error::dims(format!(
                "config has {} agents, sensitivity has {}",
                self.num_agents(),
                sensitivity.num_agents()
            )));
        }
        for (i, sensor) in self.sensors.iter().enumerate() {
            if sensor.state_dim() != sensitivity.state_dim() {
                return Err(Error::dims(format!(
                    "agent {i}: sensor expects state dim {}, sensitivity has {}",
                    sensor.state_dim(),
                    sensitivity.state_dim()
                )));
            }
        }
        Ok(())
    }
}

/// Output of [`solve_game`]: equilibrium covariances, per-agent empowerment
/// in nats, and convergence diagnostics.
#[derive(Clone, Debug)]
pub struct EmpowermentReport {
    pub covariances: Vec<InputCovariance>,
    pub empowerment: Vec<f64>,
    pub sweeps_used: usize,
    pub converged: bool,
    pub final_residual: f64,
}

fn check_covariances(
    sensitivity: &SensitivityMatrix,
    covariances: &[InputCovariance],
) -> Result<()> {
    if covariances.len() != sensitivity.num_agents() {
        return Err(Error::dims(format!(
            "{} covariances for {} agents",
            covariances.len(),
            sensitivity.num_agents()
        )));
    }
    for (m, cov) in covariances.iter().enumerate() {
        if cov.dim() != sensitivity.input_cols(m) {
            return Err(Error::dims(format!(
                "agent {m}: covariance is {}x{} but input dim is {}",
                cov.dim(),
                cov.dim(),
                sensitivity.input_cols(m)
            )));
        }
    }
    Ok(())
}

/// Effective noise covariance seen by `agent`: its own observation noise plus
/// every other agent's probing pushed through the coupling blocks and the
/// sensor.
pub fn effective_noise(
    agent: usize,
    sensitivity: &SensitivityMatrix,
    covariances: &[InputCovariance],
    config: &GameConfig,
) -> Result<NoiseCovariance> {
    config.check_against(sensitivity)?;
    check_covariances(sensitivity, covariances)?;
    let sensor = config.sensors[agent].matrix();
    let mut total = config.sensor_noise[agent].matrix().clone();
    for m in 0..sensitivity.num_agents() {
        if m == agent {
            continue;
        }
        let reach = sensor * sensitivity.block(agent, m);
        total += covariances[m].push_through(&reach);
    }
    NoiseCovariance::new((&total + total.transpose()) * 0.5)
}

/// Agent `agent`'s water-filling best response against the other agents'
/// current probing covariances.
pub fn best_response(
    agent: usize,
    sensitivity: &SensitivityMatrix,
    covariances: &[InputCovariance],
    config: &GameConfig,
) -> Result<InputCovariance> {
    let noise = effective_noise(agent, sensitivity, covariances, config)?;
    let direct = config.sensors[agent].matrix() * sensitivity.block(agent, agent);
    waterfill(&ChannelMatrix::new(direct)?, &noise, config.budgets[agent])
}

/// Agent `agent`'s empowerment in nats at the given covariance profile:
/// `½·ln|C F S Fᵀ Cᵀ + Σ| − ½·ln|Σ|` with `Σ` the effective noise.
pub fn empowerment_of(
    agent: usize,
    sensitivity: &SensitivityMatrix,
    covariances: &[InputCovariance],
    config: &GameConfig,
) -> Result<f64> {
    let noise = effective_noise(agent, sensitivity, covariances, config)?;
    let direct = config.sensors[agent].matrix() * sensitivity.block(agent, agent);
    capacity(&ChannelMatrix::new(direct)?, &covariances[agent], &noise)
}

fn frobenius_distance(a: &InputCovariance, b: &InputCovariance) -> f64 {
    (a.matrix() - b.matrix()).norm()
}

/// Iterative water-filling over all agents (Gauss–Seidel sweeps in index
/// order) until the largest per-agent covariance change drops to the
/// tolerance or `max_sweeps` is exhausted. Non-convergence is reported in the
/// result, never raised. Empowerment is evaluated with effective noises
/// recomputed from the final covariances.
///
/// ```
/// use empower::channel::{NoiseCovariance, PowerBudget};
/// use empower::game::{solve_game, GameConfig, SensitivityMatrix, SensorMatrix};
/// use nalgebra::DMatrix;
///
/// // Coupling acts as interference: it can only lower empowerment relative
/// // to the free-channel Shannon rate.
/// let coupled = SensitivityMatrix::new(vec![
///     vec![DMatrix::identity(1, 1), DMatrix::from_element(1, 1, 0.8)],
///     vec![DMatrix::from_element(1, 1, 0.8), DMatrix::identity(1, 1)],
/// ]).unwrap();
/// let config = GameConfig::uniform(
///     2,
///     PowerBudget::new(3.0).unwrap(),
///     NoiseCovariance::isotropic(1, 1.0).unwrap(),
///     SensorMatrix::identity(1),
/// ).unwrap();
///
/// let report = solve_game(&coupled, &config, None).unwrap();
/// let free_rate = 0.5 * 4.0_f64.ln();
/// assert!(report.empowerment[0] < free_rate);
/// ```
pub fn solve_game(
    sensitivity: &SensitivityMatrix,
    config: &GameConfig,
    initial: Option<&[InputCovariance]>,
) -> Result<EmpowermentReport> {
    config.check_against(sensitivity)?;
    let n = sensitivity.num_agents();

    let mut covariances: Vec<InputCovariance> = match initial {
        Some(given) => {
            check_covariances(sensitivity, given)?;
            for (m, cov) in given.iter().enumerate() {
                let p = config.budgets[m].value();
                if cov.trace() > p + 1e-9 {
                    return Err(Error::InvalidConfig(format!(
                        "initial covariance of agent {m} has trace {} over budget {p}",
                        cov.trace()
                    )));
                }
            }
            given.to_vec()
        }
        None => (0..n)
            .map(|m| {
                let dim = sensitivity.input_cols(m);
                InputCovariance::uniform(dim, config.budgets[m].value())
            })
            .collect(),
    };

    let mut sweeps_used = 0;
    let mut converged = false;
    let mut final_residual = f64::INFINITY;
    for _ in 0..config.max_sweeps {
        sweeps_used += 1;
        let mut residual = 0.0_f64;
        for agent in 0..n {
            let updated = best_response(agent, sensitivity, &covariances, config)?;
            residual = residual.max(frobenius_distance(&updated, &covariances[agent]));
            covariances[agent] = updated;
        }
        final_residual = residual;
        if residual <= config.tolerance {
            converged = true;
            break;
        }
    }

    let empowerment = (0..n)
        .map(|agent| empowerment_of(agent, sensitivity, &covariances, config))
        .collect::<Result<Vec<_>>>()?;

    Ok(EmpowermentReport {
        covariances,
        empowerment,
        sweeps_used,
        converged,
        final_residual,
    })
}

/// `C x` — the sensed output of one agent's state vector.
pub fn sensor_output(sensor: &SensorMatrix, state: &DVector<f64>) -> Result<DVector<f64>> {
    if sensor.state_dim() != state.len() {
        return Err(Error::dims(format!(
            "sensor expects state dim {}, got {}",
            sensor.state_dim(),
            state.len()
        )));
    }
    Ok(sensor.matrix() * state)
}
