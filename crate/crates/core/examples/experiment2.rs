//! Fine-tuning from an accurate checkpoint on same-digit pairs only.
//!
//! A first run on uniformly paired glyphs produces the checkpoint. Each
//! synthesizer then continues training on pairs that always show the same
//! digit twice, and is scored on uniformly paired test data.
//!
//! `cargo run --release --example experiment2 -- [seeds]`

use symcor::datalog::addition_program;
use symcor::harness::report::mean_std;
use symcor::harness::train::{initial_network, run_experiment, train_prepared};
use symcor::harness::{ExperimentConfig, Pairing, Prepared};
use symcor::synth::SynthesizerKind;

fn main() -> symcor::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let program = addition_program();
    let dir = tempfile_dir()?;
    let ckpt = dir.join("pretrained.symc");

    let pre = ExperimentConfig {
        synthesizer: SynthesizerKind::random(),
        ..ExperimentConfig::default()
    };
    let data = Prepared::new(&pre, &program)?;
    let out = train_prepared(&pre, &data, 0, initial_network(&pre, 0)?)?;
    println!("checkpoint: symbol acc {:.4}", out.report.symbol_acc);
    out.network.save(&ckpt)?;

    let base = ExperimentConfig {
        pairing: Pairing::same_digit(),
        checkpoint: Some(ckpt),
        seeds: (0..seeds).collect(),
        ..ExperimentConfig::default()
    };
    let data = Prepared::new(&base, &program)?;
    for kind in [SynthesizerKind::Closest, SynthesizerKind::Multiple, SynthesizerKind::random()] {
        let cfg = ExperimentConfig {
            synthesizer: kind,
            ..base.clone()
        };
        let runs = run_experiment(&cfg, &data, 1)?;
        let sym: Vec<f64> = runs.iter().map(|o| o.report.symbol_acc).collect();
        let out: Vec<f64> = runs.iter().map(|o| o.report.output_acc).collect();
        let (ms, ss) = mean_std(&sym);
        let (mo, _) = mean_std(&out);
        println!("{:<9} output {mo:.4}  symbol {ms:.4} ± {ss:.4}  per seed {sym:.3?}", kind.name());
    }
    Ok(())
}

fn tempfile_dir() -> std::io::Result<std::path::PathBuf> {
    let d = std::env::temp_dir().join("symcor-experiment2");
    std::fs::create_dir_all(&d)?;
    Ok(d)
}
