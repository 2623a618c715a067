//! Acceptance gate: runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line each. Exits non-zero if any gating criterion fails.
//!
//! The optional full-scale MNIST criterion runs only when
//! `SYMCOR_MNIST_DIR` names a directory holding the four standard IDX files.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symcor::datalog::addition_program;
use symcor::gradcheck::{central_difference, max_relative_error};
use symcor::grounding::{smooth_ground, GroupSpec, ProbVector};
use symcor::harness::report::mean_std;
use symcor::harness::{implication_audit, run_experiment, xor_demo, DatasetSpec, ExperimentConfig, Pairing, Prepared, TrainOutcome};
use symcor::inverse::{enumerate_preimage, forced_symbol};
use symcor::semiring::{prob_evaluate, AssignmentTable, NLL_FLOOR};
use symcor::synth::{synthesize_multiple, SynthesizerKind};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

struct Gate {
    failures: usize,
}

impl Gate {
    fn run(&mut self, id: &str, name: &str, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        println!("{} [{id}] {name}: {} ({secs:.1}s)", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        if !o.passed {
            self.failures += 1;
        }
    }
}

fn one_hot_consistency() -> Outcome {
    let start = Instant::now();
    let p = addition_program();
    let spec = GroupSpec::by_input_relation(&p);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let choice: Vec<usize> = spec.groups().iter().map(|g| rng.random_range(0..g.len())).collect();
        let bits = spec.bitstring_of(&choice);
        let pv = ProbVector::from_bits(&bits, &spec).unwrap();
        let po = prob_evaluate(&p, &pv, &spec).unwrap();
        let out = p.evaluate(&bits).unwrap();
        if (0..p.output_len()).any(|k| po.out_probs[k] != if out.get(k) { 1.0 } else { 0.0 }) {
            mismatches += 1;
        }
    }
    let t = start.elapsed();
    outcome(
        mismatches == 0 && t < Duration::from_secs(10),
        format!("1000 one-hot vectors, {mismatches} mismatches"),
    )
}

/// Composed loss recomputed through the public pipeline, independent of the
/// fused gradient routine.
fn composed_nll(p: &symcor::datalog::Program, spec: &GroupSpec, z: &[f64], label: usize) -> f64 {
    let pv = smooth_ground(z, spec).unwrap();
    let po = prob_evaluate(p, &pv, spec).unwrap();
    -po.out_probs[label].max(NLL_FLOOR).ln()
}

fn gradient_exactness() -> Outcome {
    let start = Instant::now();
    let p = addition_program();
    let spec = GroupSpec::by_input_relation(&p);
    let table = AssignmentTable::build(&p, &spec).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let z: Vec<f64> = (0..20).map(|_| rng.random_range(-3.0..3.0)).collect();
        let label = rng.random_range(0..19);
        let (_, g) = synthesize_multiple(&z, label, &table).unwrap();
        let fd = central_difference(|x| composed_nll(&p, &spec, x, label), &z, 1e-4);
        worst = worst.max(max_relative_error(&g, &fd));
    }
    let t = start.elapsed();
    outcome(
        worst <= 1e-4 && t < Duration::from_secs(60),
        format!("100 logit vectors, max relative error {worst:.2e}"),
    )
}

fn preimage_law() -> Outcome {
    let p = addition_program();
    let spec = GroupSpec::by_input_relation(&p);
    let mut total = 0;
    let mut ok = true;
    let mut forced = Vec::new();
    for s in 0..19 {
        let ps = enumerate_preimage(&p, s, &spec).unwrap();
        let expected = if s <= 9 { s + 1 } else { 19 - s };
        ok &= ps.len() == expected;
        total += ps.len();
        if forced_symbol(&ps).is_some() {
            forced.push(s);
        }
    }
    ok &= total == 100 && forced == [0, 18];
    outcome(ok, format!("{total} candidates in total, forced labels {forced:?}"))
}

fn xor_impossibility() -> Outcome {
    let r = xor_demo().unwrap();
    let (o, s) = (r.output_correct(), r.symbol_correct());
    outcome(o == 4 && s == 0, format!("output correct {o}/4, symbol correct {s}/4"))
}

fn run_kind(base: &ExperimentConfig, data: &Prepared, kind: SynthesizerKind, seeds: std::ops::Range<u64>) -> Vec<TrainOutcome> {
    let cfg = ExperimentConfig {
        synthesizer: kind,
        seeds: seeds.collect(),
        ..base.clone()
    };
    run_experiment(&cfg, data, 1).unwrap()
}

fn symbol_accs(runs: &[TrainOutcome]) -> Vec<f64> {
    runs.iter().map(|o| o.report.symbol_acc).collect()
}

fn ideal_upper_bound(base: &ExperimentConfig, data: &Prepared) -> Outcome {
    let start = Instant::now();
    let runs = run_kind(base, data, SynthesizerKind::Ideal, 0..5);
    let acc = symbol_accs(&runs);
    let min = acc.iter().cloned().fold(1.0, f64::min);
    let t = start.elapsed();
    outcome(
        min >= 0.95 && t < Duration::from_secs(300),
        format!("5 seeds, test symbol accuracy min {min:.4}, per seed {acc:.3?}"),
    )
}

fn experiment_one(base: &ExperimentConfig, data: &Prepared) -> (Outcome, TrainOutcome) {
    let closest = symbol_accs(&run_kind(base, data, SynthesizerKind::Closest, 0..10));
    let random_runs = run_kind(base, data, SynthesizerKind::random(), 0..10);
    let random = symbol_accs(&random_runs);
    let (mc, sc) = mean_std(&closest);
    let (mr, sr) = mean_std(&random);
    let passed = sc >= sr;
    let flag = if passed { "" } else { " -- investigate: Closest is not more seed-sensitive than Random" };
    let best = random_runs
        .into_iter()
        .max_by(|a, b| a.report.symbol_acc.total_cmp(&b.report.symbol_acc))
        .unwrap();
    (
        outcome(
            passed,
            format!("10 seeds, symbol accuracy closest {mc:.4} ± {sc:.4}, random {mr:.4} ± {sr:.4}{flag}"),
        ),
        best,
    )
}

fn experiment_two(base: &ExperimentConfig, pretrained: &TrainOutcome, dir: &Path) -> Outcome {
    if pretrained.report.symbol_acc < 0.95 {
        return outcome(false, format!("checkpoint symbol accuracy {:.4} < 0.95", pretrained.report.symbol_acc));
    }
    let ckpt = dir.join("pretrained.symc");
    pretrained.network.save(&ckpt).unwrap();
    let cfg = ExperimentConfig {
        pairing: Pairing::same_digit(),
        checkpoint: Some(ckpt),
        ..base.clone()
    };
    let data = Prepared::new(&cfg, &addition_program()).unwrap();
    let closest = mean_std(&symbol_accs(&run_kind(&cfg, &data, SynthesizerKind::Closest, 0..5))).0;
    let multiple = mean_std(&symbol_accs(&run_kind(&cfg, &data, SynthesizerKind::Multiple, 0..5))).0;
    let random = mean_std(&symbol_accs(&run_kind(&cfg, &data, SynthesizerKind::random(), 0..10))).0;
    outcome(
        closest >= 0.9 && multiple >= 0.9 && random < closest && random < multiple,
        format!(
            "checkpoint {:.4}; mean symbol accuracy closest {closest:.4} (5 seeds), multiple {multiple:.4} (5 seeds), random {random:.4} (10 seeds)",
            pretrained.report.symbol_acc
        ),
    )
}

fn implication(evaluations_before: u64) -> Outcome {
    let (evals, violations) = implication_audit();
    outcome(
        violations == 0 && evals > evaluations_before,
        format!("{evals} evaluations, {violations} symbol-correct but output-incorrect points"),
    )
}

fn cli_determinism(dir: &Path) -> Outcome {
    let cfg = ExperimentConfig {
        dataset: DatasetSpec::Synthetic {
            train: 300,
            test: 100,
            noise: 0.05,
            seed: 3,
        },
        seeds: vec![0, 1],
        epochs: 3,
        trace_pseudolabels: true,
        ..ExperimentConfig::default()
    };
    let cfg_path = dir.join("determinism.json");
    std::fs::write(&cfg_path, cfg.to_json()).unwrap();
    let invoke = |out: &Path, parallel: &str| {
        let argv: Vec<String> = [
            "symcor",
            "train",
            "--config",
            cfg_path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--parallel-seeds",
            parallel,
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        symcor::cli::main_dispatch(&argv, &mut Vec::new(), &mut Vec::new())
    };
    let runs: Vec<PathBuf> = (0..3).map(|i| dir.join(format!("run{i}"))).collect();
    let codes = [invoke(&runs[0], "1"), invoke(&runs[1], "1"), invoke(&runs[2], "2")];
    let mut files: Vec<String> = std::fs::read_dir(&runs[0])
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    files.sort();
    let identical = files.iter().all(|f| {
        let a = std::fs::read(runs[0].join(f)).unwrap();
        runs[1..].iter().all(|r| std::fs::read(r.join(f)).ok().as_ref() == Some(&a))
    });
    outcome(
        codes == [0, 0, 0] && identical && files.contains(&"report.csv".to_string()),
        format!("3 invocations (one with 2 worker threads), {} files byte-identical: {identical}", files.len()),
    )
}

fn mnist_full_scale(dir: &Path) -> Option<Outcome> {
    let root = PathBuf::from(std::env::var_os("SYMCOR_MNIST_DIR")?);
    let f = |n: &str| root.join(n);
    let names = ["train-images-idx3-ubyte", "train-labels-idx1-ubyte", "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"];
    if !names.iter().all(|n| f(n).is_file()) {
        return None;
    }
    let cfg = ExperimentConfig {
        dataset: DatasetSpec::Mnist {
            train_images: f(names[0]),
            train_labels: f(names[1]),
            test_images: f(names[2]),
            test_labels: f(names[3]),
            train: 30_000,
            test: 5000,
            seed: 0,
        },
        seeds: (0..5).collect(),
        ..ExperimentConfig::default()
    };
    let _ = dir;
    let data = Prepared::new(&cfg, &addition_program()).unwrap();
    let runs = run_kind(&cfg, &data, SynthesizerKind::random(), 0..5);
    let out = mean_std(&runs.iter().map(|o| o.report.output_acc).collect::<Vec<_>>()).0;
    let sym = mean_std(&symbol_accs(&runs)).0;
    Some(outcome(
        (out - 0.98).abs() <= 0.05 && (sym - 0.98).abs() <= 0.05,
        format!("random, 5 seeds: mean output {out:.4}, symbol {sym:.4}"),
    ))
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let mut gate = Gate { failures: 0 };
    let (evals_at_start, _) = implication_audit();

    gate.run("1", "boolean/probabilistic consistency", one_hot_consistency);
    gate.run("2", "gradient exactness", gradient_exactness);
    gate.run("3", "preimage law", preimage_law);
    gate.run("4", "xor impossibility demo", xor_impossibility);

    let base = ExperimentConfig::default();
    let data = Prepared::new(&base, &addition_program()).unwrap();
    gate.run("5", "ideal upper bound", || ideal_upper_bound(&base, &data));
    let mut pretrained = None;
    gate.run("7", "experiment one: closest varies more than random", || {
        let (o, best) = experiment_one(&base, &data);
        pretrained = Some(best);
        o
    });
    let pretrained = pretrained.unwrap();
    gate.run("8", "experiment two: same-digit fine-tuning", || {
        experiment_two(&base, &pretrained, dir.path())
    });
    gate.run("9", "train determinism", || cli_determinism(dir.path()));
    gate.run("6", "symbol correctness implies output correctness", || implication(evals_at_start));

    match mnist_full_scale(dir.path()) {
        Some(o) => {
            // Not gating.
            println!("{} [10] full-scale MNIST (optional): {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        }
        None => println!("SKIP [10] full-scale MNIST (optional): set SYMCOR_MNIST_DIR to the IDX files"),
    }

    if gate.failures > 0 {
        println!("{} gating criteria failed", gate.failures);
        std::process::exit(1);
    }
    println!("all gating criteria passed");
}
