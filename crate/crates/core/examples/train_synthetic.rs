//! Trains one synthesizer on synthetic glyph pairs and prints the run report.
//!
//! `cargo run --example train_synthetic -- [ideal|multiple|closest|random] [seed]`

use std::time::Instant;

use symcor::datalog::addition_program;
use symcor::harness::{train, ExperimentConfig};
use symcor::synth::SynthesizerKind;

fn main() -> symcor::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let kind = match args.first().map(String::as_str).unwrap_or("random") {
        "ideal" => SynthesizerKind::Ideal,
        "multiple" => SynthesizerKind::Multiple,
        "closest" => SynthesizerKind::Closest,
        _ => SynthesizerKind::random(),
    };
    let seed = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let config = ExperimentConfig {
        synthesizer: kind,
        ..ExperimentConfig::default()
    };
    let start = Instant::now();
    let r = train(&config, &addition_program(), seed)?;
    println!("synthesizer      {}", r.synthesizer);
    println!("seed             {}", r.seed);
    for (e, a) in r.train_output_acc.iter().enumerate() {
        println!("epoch {:>2}         train output acc {a:.4}", e + 1);
    }
    println!("selected epoch   {}", r.epoch_selected);
    println!("test output acc  {:.4}", r.output_acc);
    println!("test symbol acc  {:.4}", r.symbol_acc);
    if let Some(s) = r.pseudolabel_stability {
        println!("stability        {s:.4}");
    }
    println!("elapsed          {:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
