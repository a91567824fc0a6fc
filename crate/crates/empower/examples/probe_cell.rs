use empower::control::{run_episode, ControlOptions, Policy, PolicyAssignment};
use empower::env::pendulum::{classify_outcome, PendulumConfig, PendulumEnv};
use empower::harness::{pendulum_game, perturbed_rest, DEFAULT_NOISE_LEVEL};
use std::time::Instant;

fn main() {
    // single-cell timing probe on the factored build
    let config = PendulumConfig { torque_bounds: vec![4.0, 4.0], ..PendulumConfig::default() };
    let env = PendulumEnv::new(config.clone()).unwrap();
    let game = pendulum_game(&config, 130, DEFAULT_NOISE_LEVEL).unwrap();
    let assignment = PolicyAssignment::new(vec![Policy::Egoistic, Policy::Altruistic(0)], 9).unwrap();
    let t0 = Instant::now();
    let record = run_episode(&env, &perturbed_rest(&config, 2026), &assignment, 130, 800, &game, &ControlOptions::default()).unwrap();
    println!("(4,4) alt cell: {:?} outcome {:?}", t0.elapsed(), classify_outcome(&config, &record.final_state));
}
