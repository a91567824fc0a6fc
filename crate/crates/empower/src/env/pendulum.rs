//! Torque-limited pendulums whose tips are coupled by an elastic tendon.
//!
//! Two hinges sit at `(0,0)` and `(d,0)`; each pendulum is a point mass `m`
//! on a rigid rod of length `l`, its tip at `hinge + l·(sin θ, −cos θ)` so
//! that `θ = 0` hangs down and `θ = π` is upright. A linear spring of
//! stiffness `k` and rest length `L₀` connects the two tips. Each agent
//! applies torque only to its own hinge:
//!
//! ```text
//! θ̈ = (u − b·ω − m·g·l·sin θ + τ_tendon) / (m·l²)
//! ```
//!
//! integrated by semi-implicit Euler (velocity first). Angles are not
//! wrapped during stepping — wrapping happens only in observation-level
//! helpers such as [`classify_outcome`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linearize::{EnvironmentModel, JointAction, JointState};
use nalgebra::DVector;

/// Full parameterization of the linked-pendulum system.
///
/// The reference system has two agents; a single-agent degenerate variant
/// (no tendon) is accepted for baseline and threshold studies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PendulumConfig {
    /// Point masses in kg, one per agent.
    pub masses: Vec<f64>,
    /// Rod length in m, shared.
    pub length: f64,
    /// Hinge separation in m.
    pub separation: f64,
    /// Gravity in m/s².
    pub gravity: f64,
    /// Hinge damping in N·m·s.
    pub damping: f64,
    /// Tendon stiffness in N/m.
    pub stiffness: f64,
    /// Tendon rest length in m.
    pub rest_length: f64,
    /// Per-agent torque bounds in N·m.
    pub torque_bounds: Vec<f64>,
    /// Timestep in s.
    pub dt: f64,
}

impl Default for PendulumConfig {
    fn default() -> Self {
        PendulumConfig {
            masses: vec![1.0, 1.0],
            length: 1.0,
            separation: 1.0,
            gravity: 9.81,
            damping: 0.1,
            stiffness: 10.0,
            rest_length: 1.0,
            torque_bounds: vec![5.0, 5.0],
            dt: 0.01,
        }
    }
}

impl PendulumConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.masses.len();
        if n == 0 || n > 2 {
            return Err(Error::InvalidConfig(format!(
                "pendulum system supports 1 or 2 agents, got {n}"
            )));
        }
        if self.torque_bounds.len() != n {
            return Err(Error::InvalidConfig(format!(
                "{} torque bounds for {n} agents",
                self.torque_bounds.len()
            )));
        }
        let positive = [
            ("length", self.length),
            ("separation", self.separation),
            ("gravity", self.gravity),
            ("rest_length", self.rest_length),
            ("dt", self.dt),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.masses.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::InvalidConfig("masses must be positive".into()));
        }
        // Stiffness 0 is the documented decoupled variant.
        if !(self.damping >= 0.0) || !(self.stiffness >= 0.0) {
            return Err(Error::InvalidConfig(
                "damping and stiffness must be nonnegative".into(),
            ));
        }
        if self.torque_bounds.iter().any(|&b| !(b >= 0.0)) {
            return Err(Error::InvalidConfig("torque bounds must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn num_agents(&self) -> usize {
        self.masses.len()
    }

    /// A single-agent copy (left agent only, no tendon).
    pub fn single(&self) -> PendulumConfig {
        PendulumConfig {
            masses: vec![self.masses[0]],
            torque_bounds: vec![self.torque_bounds[0]],
            ..self.clone()
        }
    }

    /// Both pendulums hanging at rest.
    pub fn hanging_rest(&self) -> JointState {
        JointState::new(vec![DVector::from_vec(vec![0.0, 0.0]); self.num_agents()])
            .expect("at least one agent")
    }
}

/// Episode outcome of the two-pendulum system: which agents finished upright.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutcomeLabel {
    LeftUp,
    RightUp,
    BothUp,
    NeitherUp,
}

impl std::fmt::Display for OutcomeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            OutcomeLabel::LeftUp => "LeftUp",
            OutcomeLabel::RightUp => "RightUp",
            OutcomeLabel::BothUp => "BothUp",
            OutcomeLabel::NeitherUp => "NeitherUp",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for OutcomeLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "LeftUp" => Ok(OutcomeLabel::LeftUp),
            "RightUp" => Ok(OutcomeLabel::RightUp),
            "BothUp" => Ok(OutcomeLabel::BothUp),
            "NeitherUp" => Ok(OutcomeLabel::NeitherUp),
            other => Err(Error::InvalidConfig(format!("unknown outcome label {other:?}"))),
        }
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let r = x.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r - two_pi
    } else {
        r
    }
}

/// Tendon torque on each hinge for tip positions at the given angles.
/// Returns zeros for the single-agent system.
fn tendon_torques(config: &PendulumConfig, theta: &[f64]) -> [f64; 2] {
    if theta.len() < 2 || config.stiffness == 0.0 {
        return [0.0, 0.0];
    }
    debug_assert_eq!(theta.len(), 2);
    let l = config.length;
    let d = config.separation;
    // Tips relative to their own hinges.
    let r0 = (l * theta[0].sin(), -l * theta[0].cos());
    let r1 = (l * theta[1].sin(), -l * theta[1].cos());
    // Tip separation vector p1 - p0 in world coordinates.
    let dx = d + r1.0 - r0.0;
    let dy = r1.1 - r0.1;
    let dist = (dx * dx + dy * dy).sqrt();
    if dist < 1e-12 {
        // Coincident tips: direction undefined, force dropped.
        return [0.0, 0.0];
    }
    let magnitude = config.stiffness * (dist - config.rest_length);
    // Force on tip 0 points toward tip 1 when the tendon is stretched.
    let fx = magnitude * dx / dist;
    let fy = magnitude * dy / dist;
    // Torque about each hinge: z-component of (tip - hinge) × force.
    let tau0 = r0.0 * fy - r0.1 * fx;
    let tau1 = r1.0 * (-fy) - r1.1 * (-fx);
    [tau0, tau1]
}

fn raw_step_into(
    config: &PendulumConfig,
    state: &JointState,
    action: &JointAction,
    out: &mut JointState,
) {
    let n = config.num_agents();
    let mut theta = [0.0; 2];
    for i in 0..n {
        theta[i] = state.agent(i)[0];
    }
    let tendon = tendon_torques(config, &theta[..n]);
    for i in 0..n {
        let m = config.masses[i];
        let l = config.length;
        let omega = state.agent(i)[1];
        let u = action.agent(i)[0];
        let accel = (u - config.damping * omega - m * config.gravity * l * theta[i].sin()
            + tendon[i])
            / (m * l * l);
        let omega_next = omega + config.dt * accel;
        let theta_next = theta[i] + config.dt * omega_next;
        let agent = out.agent_mut(i);
        agent[0] = theta_next;
        agent[1] = omega_next;
    }
    out.set_noise_cursor(state.noise_cursor());
}

fn raw_step(config: &PendulumConfig, state: &JointState, action: &JointAction) -> JointState {
    let mut out = state.clone();
    raw_step_into(config, state, action, &mut out);
    out
}

/// One bound-checked step of the linked-pendulum dynamics.
pub fn pendulum_step(
    config: &PendulumConfig,
    state: &JointState,
    action: &JointAction,
) -> Result<JointState> {
    config.validate()?;
    for agent in 0..config.num_agents() {
        let value = action.agent(agent)[0];
        let bound = config.torque_bounds[agent];
        if value.abs() > bound {
            return Err(Error::ActionOutOfBounds {
                agent,
                value,
                bound,
            });
        }
    }
    Ok(raw_step(config, state, action))
}

/// Labels the final state: a pendulum is "up" iff its angle is within ±1 rad
/// of vertical (`θ = π` in this convention).
pub fn classify_outcome(config: &PendulumConfig, final_state: &JointState) -> OutcomeLabel {
    let up = |agent: usize| -> bool {
        if agent >= config.num_agents() {
            return false;
        }
        wrap_angle(final_state.agent(agent)[0] - std::f64::consts::PI).abs() <= 1.0
    };
    match (up(0), up(1)) {
        (true, true) => OutcomeLabel::BothUp,
        (true, false) => OutcomeLabel::LeftUp,
        (false, true) => OutcomeLabel::RightUp,
        (false, false) => OutcomeLabel::NeitherUp,
    }
}

/// Total mechanical energy: kinetic + gravitational (zero at hanging) +
/// tendon elastic.
///
/// ```
/// use empower::env::pendulum::{mechanical_energy, pendulum_step, PendulumConfig};
/// use empower::linearize::{JointAction, JointState};
/// use nalgebra::DVector;
///
/// // Undamped and unforced, the symplectic stepper keeps energy in a band.
/// let config = PendulumConfig { damping: 0.0, ..PendulumConfig::default() };
/// let mut x = JointState::new(vec![
///     DVector::from_vec(vec![0.5, 0.0]),
///     DVector::from_vec(vec![-0.3, 0.0]),
/// ]).unwrap();
/// let e0 = mechanical_energy(&config, &x);
/// for _ in 0..200 {
///     x = pendulum_step(&config, &x, &JointAction::zeros(2, 1)).unwrap();
/// }
/// let drift = (mechanical_energy(&config, &x) - e0).abs() / e0;
/// assert!(drift < 0.05);
/// ```
pub fn mechanical_energy(config: &PendulumConfig, state: &JointState) -> f64 {
    let n = config.num_agents();
    let l = config.length;
    let mut energy = 0.0;
    for i in 0..n {
        let theta = state.agent(i)[0];
        let omega = state.agent(i)[1];
        let m = config.masses[i];
        energy += 0.5 * m * l * l * omega * omega;
        energy += m * config.gravity * l * (1.0 - theta.cos());
    }
    if n == 2 {
        let theta: Vec<f64> = (0..2).map(|i| state.agent(i)[0]).collect();
        let dx = config.separation + l * (theta[1].sin() - theta[0].sin());
        let dy = -l * theta[1].cos() + l * theta[0].cos();
        let dist = (dx * dx + dy * dy).sqrt();
        energy += 0.5 * config.stiffness * (dist - config.rest_length).powi(2);
    }
    energy
}

/// [`EnvironmentModel`] wrapper. The trait step applies the raw dynamics;
/// bounds are enforced by [`pendulum_step`] and by the control layer's
/// candidate grids.
#[derive(Clone, Debug)]
pub struct PendulumEnv {
    config: PendulumConfig,
}

impl PendulumEnv {
    pub fn new(config: PendulumConfig) -> Result<Self> {
        config.validate()?;
        Ok(PendulumEnv { config })
    }

    pub fn config(&self) -> &PendulumConfig {
        &self.config
    }
}

impl EnvironmentModel for PendulumEnv {
    fn num_agents(&self) -> usize {
        self.config.num_agents()
    }

    fn state_dim(&self) -> usize {
        2
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn dt(&self) -> f64 {
        self.config.dt
    }

    fn action_bound(&self, agent: usize) -> f64 {
        self.config.torque_bounds[agent]
    }

    fn step_into(&self, state: &JointState, action: &JointAction, out: &mut JointState) {
        raw_step_into(&self.config, state, action, out);
    }
}
