use empower::env::pendulum::{PendulumConfig, PendulumEnv};
use empower::game::SensitivityMatrix;
use empower::linearize::{sensitivity_with_step, JointState};
use nalgebra::{DMatrix, DVector};

fn stack(s: &SensitivityMatrix, horizon: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(4, 2 * horizon);
    for n in 0..2 {
        for m in 0..2 {
            out.view_mut((n * 2, m * horizon), (2, horizon)).copy_from(s.block(n, m));
        }
    }
    out
}

fn main() {
    let config = PendulumConfig::default();
    let env = PendulumEnv::new(config).unwrap();
    let state = JointState::new(vec![
        DVector::from_vec(vec![1.2, 1.5]),
        DVector::from_vec(vec![-0.8, -0.9]),
    ]).unwrap();
    for horizon in [5usize, 20, 60] {
        for h in [2.0, 1.0, 0.5, 0.1] {
            let c = stack(&sensitivity_with_step(&env, &state, horizon, Some(h)).unwrap(), horizon);
            let hf = stack(&sensitivity_with_step(&env, &state, horizon, Some(h / 2.0)).unwrap(), horizon);
            let r = stack(&sensitivity_with_step(&env, &state, horizon, Some(h / 16.0)).unwrap(), horizon);
            let e1 = (&c - &r).norm();
            let e2 = (&hf - &r).norm();
            println!("horizon {horizon:3} h {h:5}: e1 {e1:10.3e} e2 {e2:10.3e} ratio {:.3}", e1 / e2);
        }
    }
}
