use empower::channel::{NoiseCovariance, PowerBudget};
use empower::control::{run_episode, ControlOptions, Policy, PolicyAssignment};
use empower::env::pendulum::{classify_outcome, wrap_angle, PendulumConfig, PendulumEnv};
use empower::game::{GameConfig, SensorMatrix};
use empower::linearize::JointState;
use nalgebra::DVector;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let tau: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(5.0);
    let steps: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(500);
    let horizon = 130;

    let config = PendulumConfig {
        masses: vec![1.0],
        torque_bounds: vec![tau],
        ..PendulumConfig::default()
    };
    let env = PendulumEnv::new(config.clone()).unwrap();
    let game = GameConfig::new(
        vec![PowerBudget::new(horizon as f64 * tau * tau).unwrap()],
        vec![NoiseCovariance::isotropic(1, 1e-2).unwrap()],
        vec![SensorMatrix::select_coordinate(2, 0).unwrap()],
        1e-6, 200,
    ).unwrap();
    let assignment = PolicyAssignment::uniform(1, Policy::Egoistic, 9).unwrap();
    let x0 = JointState::new(vec![DVector::from_vec(vec![0.01, 0.0])]).unwrap();

    let t0 = Instant::now();
    let record = run_episode(&env, &x0, &assignment, horizon, steps, &game, &ControlOptions::default()).unwrap();
    println!("episode took {:?}, err={:?}", t0.elapsed(), record.error);
    for (k, s) in record.steps.iter().enumerate() {
        if k % 50 == 0 {
            println!("k={k:4} theta={:+.3} omega={:+.3} u={:+.2} E={:.3}",
                wrap_angle(s.state.agent(0)[0]), s.state.agent(0)[1], s.action.agent(0)[0], s.empowerment[0]);
        }
    }
    let f = &record.final_state;
    println!("final theta={:+.4} (wrap dist from pi: {:.3}) outcome={:?}",
        wrap_angle(f.agent(0)[0]),
        wrap_angle(f.agent(0)[0] - std::f64::consts::PI).abs(),
        classify_outcome(&config, f));
}
