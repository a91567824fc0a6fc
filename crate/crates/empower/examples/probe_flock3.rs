use empower::control::{ControlOptions, Policy, PolicyAssignment};
use empower::env::flock::FlockConfig;
use empower::harness::{bimodality, flock_game, run_flock_study};
use std::time::Instant;

fn main() {
    let a: Vec<String> = std::env::args().collect();
    let policy = a.get(1).map(|s| s.as_str()).unwrap_or("ego");
    let accel: f64 = a.get(2).map(|s| s.parse().unwrap()).unwrap_or(2.0);
    let damping: f64 = a.get(3).map(|s| s.parse().unwrap()).unwrap_or(0.5);
    let horizon: usize = a.get(4).map(|s| s.parse().unwrap()).unwrap_or(10);
    let noise_level: f64 = a.get(5).map(|s| s.parse().unwrap()).unwrap_or(1e-2);
    let steps: usize = a.get(6).map(|s| s.parse().unwrap()).unwrap_or(800);
    let seed: u64 = a.get(7).map(|s| s.parse().unwrap()).unwrap_or(1);
    let speed: f64 = a.get(8).map(|s| s.parse().unwrap()).unwrap_or(0.5);
    let align: f64 = a.get(9).map(|s| s.parse().unwrap()).unwrap_or(2.0);

    let config = FlockConfig {
        agents: 25,
        accel_bound: accel,
        angular_damping: damping,
        speed,
        align_strength: align,
        noise_seed: seed,
        ..FlockConfig::default()
    };
    let assignment = PolicyAssignment::uniform(
        25,
        if policy == "ego" { Policy::Egoistic } else { Policy::Passive },
        5,
    ).unwrap();
    let game = flock_game(&config, horizon, noise_level).unwrap();
    let options = ControlOptions { sparsify: true, reuse_interference: false };

    let t0 = Instant::now();
    let study = run_flock_study(&config, &assignment, horizon, steps, &game, &options, &[]).unwrap();
    let s = &study.series;
    let n = s.len();
    let op: Vec<String> = (0..=8).map(|i| format!("{:.2}", s.order_parameter[((n - 1) * i) / 8])).collect();
    let mut mean_abs_u = 0.0;
    let mut mean_abs_w = 0.0;
    let mut count = 0usize;
    for step in study.episode.steps.iter().skip(n / 2) {
        for i in 0..25 {
            mean_abs_u += step.action.agent(i)[0].abs();
            mean_abs_w += step.state.agent(i)[3].abs();
            count += 1;
        }
    }
    println!(
        "{policy} a={accel} z={damping} t={horizon} s={noise_level} v={speed} k={align} T={steps} seed={seed}: OP [{}] tmE={:.4} |u|={:.2} |w|={:.2} [{:?}]",
        op.join(" "),
        s.mean_empowerment.iter().sum::<f64>() / n as f64,
        mean_abs_u / count as f64,
        mean_abs_w / count as f64,
        t0.elapsed(),
    );
    let headings: Vec<f64> = study.episode.final_state.agents().iter().map(|x| x[2]).collect();
    let bi = bimodality(&headings).unwrap();
    println!("  bimodal: sep={:.3} mass={:.3} ok={}", bi.separation, bi.mass_fraction, bi.is_bimodal());
}
