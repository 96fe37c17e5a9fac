use cafe_core::baselines::BaselineMethod;
use cafe_core::experiment::{run_table2_experiment, Table2Config};
use cafe_core::synth::SynthConfig;
use cafe_core::train::TrainConfig;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let epochs: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(300);
    let lr: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1e-3);
    let restarts: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(2);
    let batch: usize = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(128);
    let config = Table2Config {
        synth: SynthConfig::default(), // D=2, l=0.3, 10k samples
        train: TrainConfig {
            hidden_dims: vec![16, 16],
            epochs,
            learning_rate: lr,
            batch_size: batch,
            n_restarts: restarts,
            ..TrainConfig::default()
        },
        baselines: vec![BaselineMethod::gradient_input()],
        c_values: vec![0.0, 0.25, 0.5, 0.75, 1.0],
        epsilon: 1e-10,
        n_seeds: 3,
    };
    let start = Instant::now();
    let outcome = run_table2_experiment(&config).unwrap();
    println!("total {:?}", start.elapsed());
    for r in &outcome.report.records {
        println!(
            "{:8} c={:?} {:10} mean {:.4} std {:.4} runtime {:.2}s",
            r.method, r.c, r.metric, r.mean, r.std, r.runtime_s
        );
    }
}
