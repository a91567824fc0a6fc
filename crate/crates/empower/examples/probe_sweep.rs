use empower::control::{Policy, PolicyAssignment};
use empower::env::pendulum::PendulumConfig;
use empower::harness::{pendulum_game, run_sweep, SweepSpec, DEFAULT_NOISE_LEVEL};
use std::time::Instant;

const GRID: [f64; 5] = [0.5, 1.75, 3.0, 4.0, 7.0];

fn main() {
    let policy = std::env::args().nth(1).unwrap_or_else(|| "ego".into());
    let right = match policy.as_str() {
        "alt" => Policy::Altruistic(0),
        _ => Policy::Egoistic,
    };
    let base = PendulumConfig::default();
    let assignment = PolicyAssignment::new(vec![Policy::Egoistic, right], 9).unwrap();
    let spec = SweepSpec::grid(&GRID, &GRID, assignment, 130, 800, 2, 2026).unwrap();
    let game = pendulum_game(&base, 130, DEFAULT_NOISE_LEVEL).unwrap();
    let t0 = Instant::now();
    let table = run_sweep(&spec, &base, &game).unwrap();
    println!("sweep {policy} done in {:?}", t0.elapsed());
    for cell in &table.cells {
        println!(
            "({:>4}, {:>4}) -> {:<10} E_final=({:.2},{:.2}) {}",
            cell.tau_left,
            cell.tau_right,
            cell.outcome.map(|o| o.to_string()).unwrap_or_default(),
            cell.final_empowerment[0],
            cell.final_empowerment[1],
            cell.error.clone().unwrap_or_default(),
        );
    }
}
