use empower::control::{run_episode, ControlOptions, Policy, PolicyAssignment};
use empower::env::pendulum::{classify_outcome, OutcomeLabel, PendulumConfig, PendulumEnv};
use empower::harness::{pendulum_game, perturbed_rest, DEFAULT_NOISE_LEVEL};

fn rights_itself(tau: f64) -> bool {
    let config = PendulumConfig {
        masses: vec![1.0],
        torque_bounds: vec![tau],
        ..PendulumConfig::default()
    };
    let env = PendulumEnv::new(config.clone()).unwrap();
    let game = pendulum_game(&config, 130, DEFAULT_NOISE_LEVEL).unwrap();
    let assignment = PolicyAssignment::uniform(1, Policy::Egoistic, 9).unwrap();
    let record = run_episode(
        &env, &perturbed_rest(&config, 2026), &assignment, 130, 800, &game,
        &ControlOptions::default(),
    ).unwrap();
    let up = classify_outcome(&config, &record.final_state) == OutcomeLabel::LeftUp;
    println!("tau {tau}: up = {up}");
    up
}

fn main() {
    let mut lo = 0.5;
    let mut hi = 5.5;
    assert!(!rights_itself(lo));
    assert!(rights_itself(hi));
    for _ in 0..5 {
        let mid = 0.5 * (lo + hi);
        if rights_itself(mid) { hi = mid; } else { lo = mid; }
    }
    println!("threshold = {hi}");
}
