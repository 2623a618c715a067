use std::path::Path;
use std::process::{Command, Output};

fn symcor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symcor")).args(args).output().unwrap()
}

fn programs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/programs"))
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn datalog_eval_on_program_file() {
    let prog = programs().join("addition.dl");
    let o = symcor(&["datalog", "eval", prog.to_str().unwrap(), "00010000000000010000"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "sum(8)\n");
}

#[test]
fn invert_forced_label() {
    let prog = programs().join("addition.dl");
    let o = symcor(&["invert", prog.to_str().unwrap(), "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "digit1=0 digit2=0\n");
    let o = symcor(&["invert", "subtraction.dl", "diff(9)"]);
    assert_eq!(stdout(&o), "digit1=9 digit2=0\n");
}

#[test]
fn missing_config_is_a_usage_error() {
    let o = symcor(&["train", "--config", "missing.json"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("usage: symcor"));
}

#[test]
fn malformed_config_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{ \"epochs\": \"many\" }").unwrap();
    let o = symcor(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn train_eval_heatmap_round() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("cfg.json"),
        r#"{"dataset": {"source": "synthetic", "train": 120, "test": 60, "seed": 4},
            "synthesizer": {"kind": "closest"}, "seeds": [3, 5], "epochs": 2,
            "network": {"hidden": [32]}, "trace_pseudolabels": true}"#,
    )
    .unwrap();
    let cfg = d.join("cfg.json");
    let out = d.join("out");
    let ckpt = d.join("model.symc");
    let o = symcor(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--save-checkpoint",
        ckpt.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = std::fs::read_to_string(out.join("report.csv")).unwrap();
    let mut lines = report.lines();
    assert_eq!(
        lines.next(),
        Some("seed,synthesizer,epoch_selected,output_acc,symbol_acc,pseudolabel_stability")
    );
    assert_eq!(lines.count(), 2);
    for seed in [3, 5] {
        let conf = std::fs::read_to_string(out.join(format!("confusion_{seed}.csv"))).unwrap();
        assert_eq!(conf.lines().count(), 10);
        let total: u64 = conf.split([',', '\n']).filter(|s| !s.is_empty()).map(|s| s.parse::<u64>().unwrap()).sum();
        assert_eq!(total, 120);
        assert!(out.join(format!("trace_{seed}.csv")).is_file());
    }

    let o = symcor(&["eval", "--checkpoint", ckpt.to_str().unwrap(), "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let seed3 = report.lines().nth(1).unwrap().split(',').collect::<Vec<_>>();
    assert_eq!(text, format!("output_acc {}\nsymbol_acc {}\n", seed3[3], seed3[4]));

    let o = symcor(&["heatmap", "--report", out.join("report.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let rates = stdout(&o);
    assert_eq!(rates.lines().count(), 10);
    for line in rates.lines() {
        let sum: f64 = line.split(',').map(|x| x.parse::<f64>().unwrap()).sum();
        assert!(sum == 0.0 || (sum - 1.0).abs() < 1e-5, "{line}");
    }
    assert_eq!(symcor(&["heatmap", "--report", "nope.csv"]).status.code(), Some(1));
}

#[test]
fn xor_demo_prints_counts() {
    let o = symcor(&["xor-demo"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("output correct 4/4, symbol correct 0/4"));
}
