use empower::control::{ControlOptions, Policy, PolicyAssignment};
use empower::env::flock::FlockConfig;
use empower::harness::{bimodality, flock_game, run_flock_study, DEFAULT_NOISE_LEVEL};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let policy = args.get(1).map(|s| s.as_str()).unwrap_or("passive");
    let box_size: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(10.0);
    let steps: usize = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(2000);
    let seed: u64 = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(1);

    let config = FlockConfig {
        agents: 25,
        box_size,
        noise_seed: seed,
        ..FlockConfig::default()
    };
    let horizon = 10;
    let assignment = PolicyAssignment::uniform(
        25,
        if policy == "ego" { Policy::Egoistic } else { Policy::Passive },
        5,
    ).unwrap();
    let game = flock_game(&config, horizon, DEFAULT_NOISE_LEVEL).unwrap();
    let options = ControlOptions { sparsify: true, reuse_interference: false };

    let t0 = Instant::now();
    let study = run_flock_study(&config, &assignment, horizon, steps, &game, &options, &[]).unwrap();
    let s = &study.series;
    let n = s.len();
    let quarter = n / 4;
    println!(
        "policy={policy} L={box_size} T={steps} seed={seed}: OP[q1]={:.3} OP[h]={:.3} OP[end]={:.3} meanE[end]={:.3} timemeanE={:.4} [{:?}]",
        s.order_parameter[quarter], s.order_parameter[n / 2], s.order_parameter[n - 1],
        s.mean_empowerment[n - 1],
        s.mean_empowerment.iter().sum::<f64>() / n as f64,
        t0.elapsed(),
    );
    let headings: Vec<f64> = study.episode.final_state.agents().iter().map(|a| a[2]).collect();
    let bi = bimodality(&headings).unwrap();
    println!("  bimodality: separation={:.3} mass={:.3} bimodal={}", bi.separation, bi.mass_fraction, bi.is_bimodal());
}
