//! Full-scale MNIST digit addition with the Random synthesizer.
//!
//! `cargo run --release --example mnist_addition -- <dir with the four IDX files> [seeds]`
//!
//! Expect hours of runtime on one core.

use std::path::PathBuf;

use symcor::datalog::addition_program;
use symcor::harness::report::mean_std;
use symcor::harness::{run_experiment, DatasetSpec, ExperimentConfig, Prepared};

fn main() -> symcor::Result<()> {
    let mut args = std::env::args().skip(1);
    let Some(dir) = args.next().map(PathBuf::from) else {
        eprintln!("usage: mnist_addition <idx dir> [seeds]");
        std::process::exit(1);
    };
    let seeds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let config = ExperimentConfig {
        dataset: DatasetSpec::Mnist {
            train_images: dir.join("train-images-idx3-ubyte"),
            train_labels: dir.join("train-labels-idx1-ubyte"),
            test_images: dir.join("t10k-images-idx3-ubyte"),
            test_labels: dir.join("t10k-labels-idx1-ubyte"),
            train: 30_000,
            test: 5000,
            seed: 0,
        },
        seeds: (0..seeds).collect(),
        ..ExperimentConfig::default()
    };
    let data = Prepared::new(&config, &addition_program())?;
    let runs = run_experiment(&config, &data, 1)?;
    for o in &runs {
        let r = &o.report;
        println!("seed {}: epoch {} output {:.4} symbol {:.4}", r.seed, r.epoch_selected, r.output_acc, r.symbol_acc);
    }
    let out: Vec<f64> = runs.iter().map(|o| o.report.output_acc).collect();
    let sym: Vec<f64> = runs.iter().map(|o| o.report.symbol_acc).collect();
    println!("mean output {:.4}, mean symbol {:.4}", mean_std(&out).0, mean_std(&sym).0);
    Ok(())
}
