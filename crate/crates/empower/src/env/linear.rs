//! Linear test environment `x' = A x + B u` on the stacked joint vectors.
//!
//! Linear dynamics have exact block Jacobians `[A^{t-1}B … B]`, which makes
//! this the reference against which the finite-difference machinery is
//! checked.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::game::SensitivityMatrix;
use crate::linearize::{EnvironmentModel, JointAction, JointState};

#[derive(Clone, Debug)]
pub struct LinearEnv {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    num_agents: usize,
    state_dim: usize,
    action_dim: usize,
    dt: f64,
    bound: f64,
}

impl LinearEnv {
    /// `a` is `(N·d_x) × (N·d_x)`, `b` is `(N·d_x) × (N·d_u)`; both act on
    /// the stacked joint vectors, so coupling is any off-diagonal block.
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        num_agents: usize,
        state_dim: usize,
        action_dim: usize,
        dt: f64,
        bound: f64,
    ) -> Result<Self> {
        let nx = num_agents * state_dim;
        let nu = num_agents * action_dim;
        if a.nrows() != nx || a.ncols() != nx {
            return Err(Error::dims(format!(
                "A must be {nx}x{nx}, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != nx || b.ncols() != nu {
            return Err(Error::dims(format!(
                "B must be {nx}x{nu}, got {}x{}",
                b.nrows(),
                b.ncols()
            )));
        }
        Ok(LinearEnv {
            a,
            b,
            num_agents,
            state_dim,
            action_dim,
            dt,
            bound,
        })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// Stacks per-agent states into one joint column vector.
    pub fn stack(&self, state: &JointState) -> DVector<f64> {
        let mut v = DVector::zeros(self.num_agents * self.state_dim);
        for n in 0..self.num_agents {
            v.rows_mut(n * self.state_dim, self.state_dim)
                .copy_from(state.agent(n));
        }
        v
    }

    pub fn stack_action(&self, action: &JointAction) -> DVector<f64> {
        let mut v = DVector::zeros(self.num_agents * self.action_dim);
        for n in 0..self.num_agents {
            v.rows_mut(n * self.action_dim, self.action_dim)
                .copy_from(action.agent(n));
        }
        v
    }

    /// Exact block Jacobian `[A^{t-1}B, …, AB, B]`, sliced into per-agent
    /// blocks. Time-major within agent: the column group of step `k` is
    /// `A^{t-1-k}B`.
    pub fn analytic_sensitivity(&self, horizon: usize) -> Result<SensitivityMatrix> {
        if horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be ≥ 1".into()));
        }
        let nx = self.num_agents * self.state_dim;
        // powers[j] = A^j B
        let mut powers = Vec::with_capacity(horizon);
        powers.push(self.b.clone());
        for j in 1..horizon {
            let next = &self.a * &powers[j - 1];
            powers.push(next);
        }
        let mut blocks: Vec<Vec<DMatrix<f64>>> = (0..self.num_agents)
            .map(|_| {
                (0..self.num_agents)
                    .map(|_| DMatrix::zeros(self.state_dim, horizon * self.action_dim))
                    .collect()
            })
            .collect();
        for k in 0..horizon {
            let phi = &powers[horizon - 1 - k]; // nx × (N·d_u)
            for n in 0..self.num_agents {
                for m in 0..self.num_agents {
                    let src = phi.view(
                        (n * self.state_dim, m * self.action_dim),
                        (self.state_dim, self.action_dim),
                    );
                    blocks[n][m]
                        .view_mut((0, k * self.action_dim), (self.state_dim, self.action_dim))
                        .copy_from(&src);
                }
            }
        }
        let _ = nx;
        SensitivityMatrix::new(blocks)
    }
}

impl EnvironmentModel for LinearEnv {
    fn num_agents(&self) -> usize {
        self.num_agents
    }

    fn state_dim(&self) -> usize {
        self.state_dim
    }

    fn action_dim(&self) -> usize {
        self.action_dim
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn action_bound(&self, _agent: usize) -> f64 {
        self.bound
    }

    fn step_into(&self, state: &JointState, action: &JointAction, out: &mut JointState) {
        let x = self.stack(state);
        let u = self.stack_action(action);
        let next = &self.a * x + &self.b * u;
        for n in 0..self.num_agents {
            out.agent_mut(n)
                .copy_from(&next.rows(n * self.state_dim, self.state_dim));
        }
        out.set_noise_cursor(state.noise_cursor());
    }
}
