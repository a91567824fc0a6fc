use empower::channel::{NoiseCovariance, PowerBudget};
use empower::control::{select_action, ControlOptions, Policy, PolicyAssignment};
use empower::env::pendulum::{PendulumConfig, PendulumEnv};
use empower::game::{solve_game, GameConfig, SensorMatrix};
use empower::linearize::{sensitivity, EnvironmentModel, JointState};
use nalgebra::DVector;
use std::time::Instant;

fn main() {
    let config = PendulumConfig { torque_bounds: vec![5.0, 5.0], ..PendulumConfig::default() };
    let env = PendulumEnv::new(config.clone()).unwrap();
    let horizon = 130;
    let game = GameConfig::new(
        vec![PowerBudget::new(horizon as f64 * 25.0).unwrap(); 2],
        vec![NoiseCovariance::isotropic(1, 1e-2).unwrap(); 2],
        vec![SensorMatrix::select_coordinate(2, 0).unwrap(); 2],
        1e-6, 200,
    ).unwrap();
    // swing state: more IWF sweeps than rest
    let x = JointState::new(vec![
        DVector::from_vec(vec![1.9, 2.5]),
        DVector::from_vec(vec![-0.6, 1.1]),
    ]).unwrap();

    let sens = sensitivity(&env, &x, horizon).unwrap();
    let rep = solve_game(&sens, &game, None).unwrap();
    println!("sweeps at swing state: {}", rep.sweeps_used);

    let t0 = Instant::now();
    for _ in 0..10 { let _ = sensitivity(&env, &x, horizon).unwrap(); }
    println!("sens x10: {:?}", t0.elapsed() / 10);
    let t1 = Instant::now();
    for _ in 0..10 { let _ = solve_game(&sens, &game, None).unwrap(); }
    println!("game x10: {:?}", t1.elapsed() / 10);

    let assignment = PolicyAssignment::uniform(2, Policy::Egoistic, 9).unwrap();
    let t2 = Instant::now();
    for agent in 0..2 {
        let _ = select_action(&env, &x, agent, &assignment, horizon, &game, &ControlOptions::default(), None).unwrap();
    }
    println!("select_action both agents (18 candidates): {:?}", t2.elapsed());
}
