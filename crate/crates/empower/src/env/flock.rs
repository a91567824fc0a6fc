//! Controllable alignment flock on a periodic square.
//!
//! Constant-speed agents carry state `(x, y, θ, ω)`. Headings relax toward
//! the circular mean of neighbors within the interaction radius (self
//! included, minimum-image metric); on top of that baseline each agent
//! drives its own angular acceleration through a damped internal rate `ω`:
//!
//! ```text
//! ω ← ω + Δt·(u − ζ·ω)
//! θ ← θ + Δt·(k_align·wrap(θ̄ − θ) + ω) + η·ξ      ξ ~ U[−½, ½)
//! p ← wrap(p + Δt·v·(cos θ, sin θ))
//! ```
//!
//! With `u ≡ 0` and `ω₀ = 0` this is a standard continuous-heading
//! alignment model. The noise draw `ξ` is a pure function of
//! `(noise_seed, noise_cursor, agent)`, with the cursor carried in the
//! state, so re-rolling from the same state replays the same noise — which
//! is exactly what finite-difference linearization needs.
//!
//! Positions are wrapped into `[0, L)` every step; headings are left
//! unwrapped (observation-level statistics wrap as needed), and Jacobian
//! differencing uses minimum-image differences on the position coordinates.

use serde::{Deserialize, Serialize};

use super::pendulum::wrap_angle;
use crate::error::{Error, Result};
use crate::linearize::{EnvironmentModel, JointAction, JointState};
use crate::rng::{hash3, unit_f64, SplitMix};
use nalgebra::DVector;

/// Full parameterization of a flock instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlockConfig {
    /// Agent count.
    pub agents: usize,
    /// Constant speed in m/s.
    pub speed: f64,
    /// Interaction radius in m.
    pub radius: f64,
    /// Alignment strength in 1/s.
    pub align_strength: f64,
    /// Heading noise amplitude in rad.
    pub noise_amplitude: f64,
    /// Angular-acceleration bound in rad/s².
    pub accel_bound: f64,
    /// Angular damping in 1/s.
    pub angular_damping: f64,
    /// Periodic domain side length in m.
    pub box_size: f64,
    /// Timestep in s.
    pub dt: f64,
    /// Seed of the heading-noise stream and of initial-state sampling.
    pub noise_seed: u64,
}

impl Default for FlockConfig {
    fn default() -> Self {
        FlockConfig {
            agents: 125,
            speed: 0.5,
            radius: 1.0,
            align_strength: 2.0,
            noise_amplitude: 0.05,
            accel_bound: 2.0,
            angular_damping: 0.5,
            box_size: 10.0,
            dt: 0.05,
            noise_seed: 0,
        }
    }
}

impl FlockConfig {
    pub fn validate(&self) -> Result<()> {
        if self.agents == 0 {
            return Err(Error::InvalidConfig("flock needs at least one agent".into()));
        }
        let positive = [
            ("speed", self.speed),
            ("radius", self.radius),
            ("box_size", self.box_size),
            ("dt", self.dt),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.noise_amplitude >= 0.0)
            || !(self.align_strength >= 0.0)
            || !(self.angular_damping >= 0.0)
            || !(self.accel_bound >= 0.0)
        {
            return Err(Error::InvalidConfig(
                "align_strength, noise_amplitude, accel_bound, angular_damping must be nonnegative"
                    .into(),
            ));
        }
        Ok(())
    }

    /// Uniformly random positions and headings, zero angular rate,
    /// noise cursor at zero. Deterministic in `noise_seed`.
    pub fn random_initial_state(&self) -> JointState {
        // Separate stream tag so initial sampling never collides with the
        // per-step heading noise derived from the same seed.
        let mut rng = SplitMix::new(self.noise_seed ^ 0xF10C_5EED_0000_0001);
        let agents = (0..self.agents)
            .map(|_| {
                let x = rng.uniform(0.0, self.box_size);
                let y = rng.uniform(0.0, self.box_size);
                let theta = rng.uniform(-std::f64::consts::PI, std::f64::consts::PI);
                DVector::from_vec(vec![x, y, theta, 0.0])
            })
            .collect();
        JointState::new(agents).expect("agents ≥ 1")
    }
}

/// Minimum-image signed difference on a periodic interval of length `l`.
pub fn min_image(d: f64, l: f64) -> f64 {
    d - l * (d / l).round()
}

/// Magnitude of the population-mean unit heading vector, in `[0, 1]`.
///
/// ```
/// use empower::env::flock::order_parameter;
///
/// let aligned = vec![0.7; 10];
/// assert!((order_parameter(&aligned).unwrap() - 1.0).abs() < 1e-12);
///
/// let split = vec![0.0, 0.0, std::f64::consts::PI, std::f64::consts::PI];
/// assert!(order_parameter(&split).unwrap() < 1e-12);
/// ```
pub fn order_parameter(headings: &[f64]) -> Result<f64> {
    if headings.is_empty() {
        return Err(Error::EmptyInput("order parameter of no headings"));
    }
    let n = headings.len() as f64;
    let sx: f64 = headings.iter().map(|t| t.cos()).sum();
    let sy: f64 = headings.iter().map(|t| t.sin()).sum();
    Ok((sx * sx + sy * sy).sqrt() / n)
}

/// Circular mean heading via the mean unit vector.
pub fn circular_mean(headings: &[f64]) -> Result<f64> {
    if headings.is_empty() {
        return Err(Error::EmptyInput("circular mean of no headings"));
    }
    let sx: f64 = headings.iter().map(|t| t.cos()).sum();
    let sy: f64 = headings.iter().map(|t| t.sin()).sum();
    Ok(sy.atan2(sx))
}

/// Equal-width histogram of headings over `(-π, π]`.
#[derive(Clone, Debug, PartialEq)]
pub struct HeadingHistogram {
    /// Center of each bin.
    pub centers: Vec<f64>,
    /// Agent count per bin; sums to the population size.
    pub counts: Vec<usize>,
    /// Whether headings were taken relative to the circular mean.
    pub mean_referenced: bool,
}

/// Bins headings (optionally relative to the flock's circular mean) into
/// `bins` equal cells over `(-π, π]`.
pub fn heading_histogram(
    headings: &[f64],
    mean_reference: bool,
    bins: usize,
) -> Result<HeadingHistogram> {
    if headings.is_empty() {
        return Err(Error::EmptyInput("histogram of no headings"));
    }
    if bins < 2 {
        return Err(Error::InvalidConfig(format!("need ≥ 2 bins, got {bins}")));
    }
    let reference = if mean_reference {
        circular_mean(headings)?
    } else {
        0.0
    };
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut counts = vec![0usize; bins];
    for &t in headings {
        let delta = wrap_angle(t - reference);
        // delta ∈ (-π, π] maps to u ∈ (0, 1]; the top edge lands in the last bin.
        let u = (delta + std::f64::consts::PI) / two_pi;
        let idx = ((u * bins as f64) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let centers = (0..bins)
        .map(|i| -std::f64::consts::PI + (i as f64 + 0.5) * two_pi / bins as f64)
        .collect();
    Ok(HeadingHistogram {
        centers,
        counts,
        mean_referenced: mean_reference,
    })
}

fn raw_step_into(
    config: &FlockConfig,
    state: &JointState,
    action: &JointAction,
    out: &mut JointState,
) {
    let n = config.agents;
    let r2 = config.radius * config.radius;
    let l = config.box_size;
    let cursor = state.noise_cursor();
    // One pass of trig per agent, reused by every neighbor query.
    let mut cos_sin = vec![(0.0, 0.0); n];
    for (j, cs) in cos_sin.iter_mut().enumerate() {
        let t = state.agent(j)[2];
        *cs = (t.cos(), t.sin());
    }
    for i in 0..n {
        let s = state.agent(i);
        let (x, y, theta, omega) = (s[0], s[1], s[2], s[3]);
        let mut sx = 0.0;
        let mut sy = 0.0;
        for j in 0..n {
            let dx = min_image(state.agent(j)[0] - x, l);
            let dy = min_image(state.agent(j)[1] - y, l);
            if dx * dx + dy * dy <= r2 {
                sx += cos_sin[j].0;
                sy += cos_sin[j].1;
            }
        }
        let mean_heading = sy.atan2(sx);
        let u = action.agent(i)[0];
        let omega_next = omega + config.dt * (u - config.angular_damping * omega);
        let xi = unit_f64(hash3(config.noise_seed, cursor, i as u64)) - 0.5;
        let theta_next = theta
            + config.dt
                * (config.align_strength * wrap_angle(mean_heading - theta) + omega_next)
            + config.noise_amplitude * xi;
        let x_next = (x + config.dt * config.speed * theta_next.cos()).rem_euclid(l);
        let y_next = (y + config.dt * config.speed * theta_next.sin()).rem_euclid(l);
        let agent = out.agent_mut(i);
        agent[0] = x_next;
        agent[1] = y_next;
        agent[2] = theta_next;
        agent[3] = omega_next;
    }
    out.set_noise_cursor(cursor + 1);
}

fn raw_step(config: &FlockConfig, state: &JointState, action: &JointAction) -> JointState {
    let mut out = state.clone();
    raw_step_into(config, state, action, &mut out);
    out
}

/// One bound-checked step of the flock dynamics.
pub fn flock_step(
    config: &FlockConfig,
    state: &JointState,
    action: &JointAction,
) -> Result<JointState> {
    config.validate()?;
    for agent in 0..config.agents {
        let value = action.agent(agent)[0];
        if value.abs() > config.accel_bound {
            return Err(Error::ActionOutOfBounds {
                agent,
                value,
                bound: config.accel_bound,
            });
        }
    }
    Ok(raw_step(config, state, action))
}

/// [`EnvironmentModel`] wrapper with locality hooks: neighborhoods are the
/// interaction disks, and the dynamics restrict to any agent subset.
#[derive(Clone, Debug)]
pub struct FlockEnv {
    config: FlockConfig,
}

impl FlockEnv {
    pub fn new(config: FlockConfig) -> Result<Self> {
        config.validate()?;
        Ok(FlockEnv { config })
    }

    pub fn config(&self) -> &FlockConfig {
        &self.config
    }

    /// Headings of every agent at a state.
    pub fn headings(state: &JointState) -> Vec<f64> {
        state.agents().iter().map(|a| a[2]).collect()
    }
}

impl EnvironmentModel for FlockEnv {
    fn num_agents(&self) -> usize {
        self.config.agents
    }

    fn state_dim(&self) -> usize {
        4
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn dt(&self) -> f64 {
        self.config.dt
    }

    fn action_bound(&self, _agent: usize) -> f64 {
        self.config.accel_bound
    }

    fn step_into(&self, state: &JointState, action: &JointAction, out: &mut JointState) {
        raw_step_into(&self.config, state, action, out);
    }

    fn state_difference(&self, a: &JointState, b: &JointState) -> Vec<DVector<f64>> {
        let l = self.config.box_size;
        a.agents()
            .iter()
            .zip(b.agents())
            .map(|(x, y)| {
                DVector::from_vec(vec![
                    min_image(x[0] - y[0], l),
                    min_image(x[1] - y[1], l),
                    x[2] - y[2],
                    x[3] - y[3],
                ])
            })
            .collect()
    }

    fn neighborhoods(&self, state: &JointState) -> Option<Vec<Vec<usize>>> {
        let n = self.config.agents;
        let r2 = self.config.radius * self.config.radius;
        let l = self.config.box_size;
        Some(
            (0..n)
                .map(|i| {
                    (0..n)
                        .filter(|&j| {
                            let dx = min_image(state.agent(j)[0] - state.agent(i)[0], l);
                            let dy = min_image(state.agent(j)[1] - state.agent(i)[1], l);
                            dx * dx + dy * dy <= r2
                        })
                        .collect()
                })
                .collect(),
        )
    }

    fn restrict(&self, agents: &[usize]) -> Option<Box<dyn EnvironmentModel>> {
        let config = FlockConfig {
            agents: agents.len(),
            ..self.config
        };
        FlockEnv::new(config)
            .ok()
            .map(|e| Box::new(e) as Box<dyn EnvironmentModel>)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn flock_state(rows: &[[f64; 4]]) -> JointState {
        JointState::new(rows.iter().map(|r| DVector::from_row_slice(r)).collect()).unwrap()
    }

    #[test]
    fn lone_agent_flies_straight_without_noise() {
        let config = FlockConfig {
            agents: 1,
            noise_amplitude: 0.0,
            ..FlockConfig::default()
        };
        let theta = 0.4;
        let mut x = flock_state(&[[5.0, 5.0, theta, 0.0]]);
        for _ in 0..50 {
            x = flock_step(&config, &x, &JointAction::zeros(1, 1)).unwrap();
            assert!((x.agent(0)[2] - theta).abs() < 1e-12, "heading drifted");
        }
        // Displacement per step has magnitude v·dt along the heading.
        let expected_x = (5.0 + 50.0 * config.dt * config.speed * theta.cos())
            .rem_euclid(config.box_size);
        assert!((x.agent(0)[0] - expected_x).abs() < 1e-9);
    }

    #[test]
    fn colocated_aligned_agents_keep_their_heading() {
        let config = FlockConfig {
            agents: 2,
            noise_amplitude: 0.0,
            ..FlockConfig::default()
        };
        let mut x = flock_state(&[[3.0, 3.0, 1.1, 0.0], [3.0, 3.0, 1.1, 0.0]]);
        for _ in 0..20 {
            x = flock_step(&config, &x, &JointAction::zeros(2, 1)).unwrap();
        }
        for n in 0..2 {
            assert!((x.agent(n)[2] - 1.1).abs() < 1e-12);
        }
    }

    #[test]
    fn consensus_rate_matches_graph_laplacian_oracle() {
        // Five agents in a tight cluster (complete interaction graph):
        // heading deviations from the mean contract per step by the
        // second-largest eigenvalue modulus of M = (1-Δt·k)I + Δt·k·A_avg.
        let config = FlockConfig {
            agents: 5,
            noise_amplitude: 0.0,
            speed: 1e-9, // keep the graph fixed during the measurement
            ..FlockConfig::default()
        };
        let base = 0.3;
        let devs = [4e-4, -3e-4, 2e-4, -2e-4, -1e-4];
        let rows: Vec<[f64; 4]> = (0..5)
            .map(|i| {
                [
                    5.0 + 0.01 * i as f64,
                    5.0,
                    base + devs[i],
                    0.0,
                ]
            })
            .collect();
        let mut x = flock_state(&rows);

        // Oracle: eigenvalues of the averaging update on the fixed graph.
        let a_avg = DMatrix::from_element(5, 5, 1.0 / 5.0);
        let m = DMatrix::identity(5, 5) * (1.0 - config.dt * config.align_strength)
            + a_avg * (config.dt * config.align_strength);
        let eig = m.symmetric_eigen();
        let mut moduli: Vec<f64> = eig.eigenvalues.iter().map(|v| v.abs()).collect();
        moduli.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let oracle_rate = moduli[1]; // consensus mode has eigenvalue 1

        let spread = |s: &JointState| -> f64 {
            let headings = FlockEnv::headings(s);
            let mean = circular_mean(&headings).unwrap();
            headings
                .iter()
                .map(|t| wrap_angle(t - mean).abs())
                .fold(0.0, f64::max)
        };
        let mut prev = spread(&x);
        let mut rates = Vec::new();
        for _ in 0..15 {
            x = flock_step(&config, &x, &JointAction::zeros(5, 1)).unwrap();
            let cur = spread(&x);
            rates.push(cur / prev);
            prev = cur;
        }
        let measured = rates.iter().sum::<f64>() / rates.len() as f64;
        assert!(
            (measured - oracle_rate).abs() < 1e-3,
            "measured contraction {measured:.5} vs oracle {oracle_rate:.5}"
        );
    }

    #[test]
    fn lattice_translation_leaves_heading_evolution_identical() {
        let config = FlockConfig {
            agents: 3,
            ..FlockConfig::default()
        };
        let base = flock_state(&[
            [1.0, 2.0, 0.3, 0.0],
            [1.5, 2.2, -0.4, 0.1],
            [8.0, 9.0, 2.0, -0.2],
        ]);
        // Shift all positions by half a box in both axes (lattice-compatible
        // offset on the torus).
        let shift = config.box_size / 2.0;
        let shifted = JointState::new(
            base.agents()
                .iter()
                .map(|a| {
                    DVector::from_vec(vec![
                        (a[0] + shift).rem_euclid(config.box_size),
                        (a[1] + shift).rem_euclid(config.box_size),
                        a[2],
                        a[3],
                    ])
                })
                .collect(),
        )
        .unwrap();
        let mut a = base;
        let mut b = shifted;
        for _ in 0..40 {
            a = flock_step(&config, &a, &JointAction::zeros(3, 1)).unwrap();
            b = flock_step(&config, &b, &JointAction::zeros(3, 1)).unwrap();
            for n in 0..3 {
                assert_eq!(a.agent(n)[2], b.agent(n)[2], "heading diverged");
                assert_eq!(a.agent(n)[3], b.agent(n)[3]);
            }
        }
    }

    #[test]
    fn every_step_moves_agents_by_exactly_speed_dt() {
        let config = FlockConfig {
            agents: 4,
            ..FlockConfig::default()
        };
        let mut x = config.random_initial_state();
        for _ in 0..30 {
            let next = flock_step(&config, &x, &JointAction::zeros(4, 1)).unwrap();
            for n in 0..4 {
                let dx = min_image(next.agent(n)[0] - x.agent(n)[0], config.box_size);
                let dy = min_image(next.agent(n)[1] - x.agent(n)[1], config.box_size);
                let step = (dx * dx + dy * dy).sqrt();
                assert!(
                    (step - config.speed * config.dt).abs() < 1e-12,
                    "step length {step}"
                );
            }
        }
    }

    #[test]
    fn noise_stream_is_frozen_by_the_state_cursor() {
        let config = FlockConfig {
            agents: 2,
            ..FlockConfig::default()
        };
        let x = config.random_initial_state();
        let a = flock_step(&config, &x, &JointAction::zeros(2, 1)).unwrap();
        let b = flock_step(&config, &x, &JointAction::zeros(2, 1)).unwrap();
        assert_eq!(a, b, "same state must replay the same noise");
        // And the cursor advances, so the next step draws fresh noise.
        assert_eq!(a.noise_cursor(), x.noise_cursor() + 1);
    }

    #[test]
    fn order_parameter_examples() {
        assert!((order_parameter(&[0.7; 8]).unwrap() - 1.0).abs() < 1e-12);
        let opposed = [0.0, 0.0, std::f64::consts::PI, std::f64::consts::PI];
        assert!(order_parameter(&opposed).unwrap() < 1e-12);
        let quarter = [0.0, std::f64::consts::FRAC_PI_2];
        assert!(
            (order_parameter(&quarter).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12
        );
        assert!(matches!(
            order_parameter(&[]),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn histogram_concentrates_aligned_headings_in_one_bin() {
        let hist = heading_histogram(&[0.9; 12], true, 8).unwrap();
        assert_eq!(hist.counts.iter().sum::<usize>(), 12);
        let occupied: Vec<usize> = hist
            .counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(occupied.len(), 1);
        // Mean-referenced: the occupied bin straddles Δθ = 0.
        assert!(hist.centers[occupied[0]].abs() < 2.0 * std::f64::consts::PI / 8.0);
    }

    #[test]
    fn histogram_of_uniform_headings_is_approximately_flat() {
        // 3600 synthetic headings spread evenly: every bin within 2% of the
        // uniform expectation (a χ² test would not reject this by a mile).
        let n = 3600;
        let headings: Vec<f64> = (0..n)
            .map(|i| -std::f64::consts::PI + (i as f64 + 0.5) * 2.0 * std::f64::consts::PI / n as f64)
            .collect();
        let bins = 36;
        let hist = heading_histogram(&headings, false, bins).unwrap();
        let expected = n / bins;
        for &c in &hist.counts {
            assert!(
                (c as isize - expected as isize).unsigned_abs() <= 2,
                "bin count {c} vs expected {expected}"
            );
        }
    }

    #[test]
    fn histogram_of_two_opposing_groups_has_two_bins_pi_apart() {
        let mut headings = vec![0.4; 10];
        headings.extend(vec![0.4 + std::f64::consts::PI; 10]);
        let hist = heading_histogram(&headings, true, 12).unwrap();
        let occupied: Vec<usize> = hist
            .counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(occupied.len(), 2);
        assert_eq!(hist.counts[occupied[0]], 10);
        assert_eq!(hist.counts[occupied[1]], 10);
        let gap = (hist.centers[occupied[1]] - hist.centers[occupied[0]]).abs();
        assert!((gap - std::f64::consts::PI).abs() < 0.6, "gap {gap}");
    }

    #[test]
    fn baseline_flock_orders_with_small_noise() {
        // Denser desk-scale box than the default so the interaction graph
        // percolates quickly; u ≡ 0 throughout.
        let config = FlockConfig {
            agents: 20,
            box_size: 5.0,
            noise_amplitude: 0.02,
            noise_seed: 7,
            ..FlockConfig::default()
        };
        let mut x = config.random_initial_state();
        let mut best: f64 = 0.0;
        for _ in 0..800 {
            x = flock_step(&config, &x, &JointAction::zeros(config.agents, 1)).unwrap();
            best = best.max(order_parameter(&FlockEnv::headings(&x)).unwrap());
        }
        assert!(best >= 0.95, "flock never ordered: best {best:.3}");
    }

    #[test]
    fn acceleration_beyond_the_bound_is_rejected() {
        let config = FlockConfig {
            agents: 1,
            ..FlockConfig::default()
        };
        let x = config.random_initial_state();
        let mut u = JointAction::zeros(1, 1);
        u.agent_mut(0)[0] = config.accel_bound + 1.0;
        assert!(matches!(
            flock_step(&config, &x, &u),
            Err(Error::ActionOutOfBounds { .. })
        ));
    }
}
