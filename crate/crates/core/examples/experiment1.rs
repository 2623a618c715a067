//! Training from scratch on uniformly paired glyphs, comparing how much each
//! synthesizer's symbol accuracy varies with the initial network.
//!
//! `cargo run --release --example experiment1 -- [seeds]`

use symcor::datalog::addition_program;
use symcor::harness::report::mean_std;
use symcor::harness::{run_experiment, ExperimentConfig, Prepared};
use symcor::synth::SynthesizerKind;

fn main() -> symcor::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let program = addition_program();
    let base = ExperimentConfig {
        seeds: (0..seeds).collect(),
        ..ExperimentConfig::default()
    };
    let data = Prepared::new(&base, &program)?;
    for kind in [SynthesizerKind::Closest, SynthesizerKind::random(), SynthesizerKind::Multiple] {
        let cfg = ExperimentConfig {
            synthesizer: kind,
            ..base.clone()
        };
        let runs = run_experiment(&cfg, &data, 1)?;
        let sym: Vec<f64> = runs.iter().map(|o| o.report.symbol_acc).collect();
        let stab: Vec<f64> = runs.iter().filter_map(|o| o.report.pseudolabel_stability).collect();
        let (m, s) = mean_std(&sym);
        print!("{:<9} symbol {m:.4} ± {s:.4}  per seed {sym:.3?}", kind.name());
        if !stab.is_empty() {
            print!("  stability {:.3}", mean_std(&stab).0);
        }
        println!();
    }
    Ok(())
}
