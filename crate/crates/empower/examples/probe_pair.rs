use empower::channel::{NoiseCovariance, PowerBudget};
use empower::control::{run_episode, ControlOptions, Policy, PolicyAssignment};
use empower::env::pendulum::{classify_outcome, wrap_angle, PendulumConfig, PendulumEnv};
use empower::game::{GameConfig, SensorMatrix};
use empower::linearize::JointState;
use nalgebra::DVector;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let tau0: f64 = args[1].parse().unwrap();
    let tau1: f64 = args[2].parse().unwrap();
    let policy_right = args.get(3).map(|s| s.as_str()).unwrap_or("ego");
    let steps: usize = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(500);
    let horizon = 130;

    let config = PendulumConfig {
        torque_bounds: vec![tau0, tau1],
        ..PendulumConfig::default()
    };
    let env = PendulumEnv::new(config.clone()).unwrap();
    let game = GameConfig::new(
        vec![
            PowerBudget::new(horizon as f64 * tau0 * tau0).unwrap(),
            PowerBudget::new(horizon as f64 * tau1 * tau1).unwrap(),
        ],
        vec![NoiseCovariance::isotropic(1, 1e-2).unwrap(); 2],
        vec![SensorMatrix::select_coordinate(2, 0).unwrap(); 2],
        1e-6, 200,
    ).unwrap();
    let right = match policy_right {
        "alt" => Policy::Altruistic(0),
        "passive" => Policy::Passive,
        _ => Policy::Egoistic,
    };
    let assignment = PolicyAssignment::new(vec![Policy::Egoistic, right], 9).unwrap();
    let x0 = JointState::new(vec![
        DVector::from_vec(vec![0.01, 0.0]),
        DVector::from_vec(vec![-0.01, 0.0]),
    ]).unwrap();

    let t0 = Instant::now();
    let record = run_episode(&env, &x0, &assignment, horizon, steps, &game, &ControlOptions::default()).unwrap();
    let f = &record.final_state;
    println!(
        "tau=({tau0},{tau1}) right={policy_right} T={steps}: theta=({:+.2},{:+.2}) outcome={:?} E_final=({:.2},{:.2}) [{:?}]",
        wrap_angle(f.agent(0)[0]), wrap_angle(f.agent(1)[0]),
        classify_outcome(&config, f),
        record.steps.last().unwrap().empowerment[0],
        record.steps.last().unwrap().empowerment[1],
        t0.elapsed(),
    );
}
