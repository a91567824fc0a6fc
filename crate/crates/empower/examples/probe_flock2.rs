use empower::control::{ControlOptions, Policy, PolicyAssignment};
use empower::env::flock::FlockConfig;
use empower::harness::{bimodality, flock_game, run_flock_study};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let policy = args.get(1).map(|s| s.as_str()).unwrap_or("ego");
    let box_size: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(10.0);
    let noise_level: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(1e-2);
    let horizon: usize = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(10);
    let steps: usize = args.get(5).map(|s| s.parse().unwrap()).unwrap_or(1200);
    let seed: u64 = args.get(6).map(|s| s.parse().unwrap()).unwrap_or(1);

    let config = FlockConfig {
        agents: 25,
        box_size,
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
    let op_profile: Vec<String> = (0..=8).map(|i| {
        let idx = ((n - 1) * i) / 8;
        format!("{:.2}", s.order_parameter[idx])
    }).collect();
    // action and spin statistics over the last half
    let mut mean_abs_u = 0.0;
    let mut mean_abs_w = 0.0;
    let mut zero_u = 0usize;
    let mut count = 0usize;
    for step in study.episode.steps.iter().skip(n / 2) {
        for a in 0..25 {
            let u = step.action.agent(a)[0];
            mean_abs_u += u.abs();
            mean_abs_w += step.state.agent(a)[3].abs();
            if u == 0.0 { zero_u += 1; }
            count += 1;
        }
    }
    println!(
        "policy={policy} L={box_size} noise={noise_level} t={horizon} T={steps} seed={seed}: OP [{}] timemeanE={:.4} |u|={:.2} zero_u={:.0}% |w|={:.2} [{:?}]",
        op_profile.join(" "),
        s.mean_empowerment.iter().sum::<f64>() / n as f64,
        mean_abs_u / count as f64,
        100.0 * zero_u as f64 / count as f64,
        mean_abs_w / count as f64,
        t0.elapsed(),
    );
    let headings: Vec<f64> = study.episode.final_state.agents().iter().map(|a| a[2]).collect();
    let bi = bimodality(&headings).unwrap();
    println!("  bimodality: separation={:.3} mass={:.3} bimodal={}", bi.separation, bi.mass_fraction, bi.is_bimodal());
}
