//! Egoistic empowerment swings a single torque-limited pendulum upright.
//!
//! The torque bound (3.5 N·m by default) is well under the m·g·l = 9.81 N·m
//! needed to lift directly, so the controller has to pump — and empowerment
//! maximization discovers pumping on its own, then balances inverted, where
//! the angle is most controllable.
//!
//! ```sh
//! cargo run --release -p empower --example swing_up -- [torque_bound] [steps]
//! ```

use empower::control::{run_episode, ControlOptions, Policy, PolicyAssignment};
use empower::env::pendulum::{classify_outcome, wrap_angle, PendulumConfig, PendulumEnv};
use empower::harness::{pendulum_game, perturbed_rest, DEFAULT_NOISE_LEVEL};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let torque: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(3.5);
    let steps: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(600);
    let horizon = 130;

    let config = PendulumConfig {
        masses: vec![1.0],
        torque_bounds: vec![torque],
        ..PendulumConfig::default()
    };
    let env = PendulumEnv::new(config.clone()).expect("valid config");
    let game = pendulum_game(&config, horizon, DEFAULT_NOISE_LEVEL).expect("valid game");
    let assignment = PolicyAssignment::uniform(1, Policy::Egoistic, 9).expect("valid assignment");

    let record = run_episode(
        &env,
        &perturbed_rest(&config, 1),
        &assignment,
        horizon,
        steps,
        &game,
        &ControlOptions::default(),
    )
    .expect("episode runs");

    println!("torque bound {torque} N·m, {} steps at dt = {} s", steps, config.dt);
    for (k, step) in record.steps.iter().enumerate() {
        if k % (steps / 10).max(1) == 0 {
            println!(
                "t = {:5.2} s  angle {:+6.2} rad  rate {:+6.2} rad/s  torque {:+5.2}  empowerment {:5.2} nats",
                step.time,
                wrap_angle(step.state.agent(0)[0]),
                step.state.agent(0)[1],
                step.action.agent(0)[0],
                step.empowerment[0],
            );
        }
    }
    println!(
        "outcome: {} (final angle {:+.3} rad from vertical)",
        classify_outcome(&config, &record.final_state),
        wrap_angle(record.final_state.agent(0)[0] - std::f64::consts::PI),
    );
}
