//! Command-line front end. Exit codes: 0 success, 1 usage error, 2 data or
//! format error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::datalog::{addition_program, subtraction_program, xor_program, Bitstring, Program};
use crate::error::Error;
use crate::grounding::GroupSpec;
use crate::harness::report::{
    fmt_f64, normalize_confusion, pooled_confusion, write_confusion_csv, write_rates_csv,
    write_run_files,
};
use crate::harness::train::run_experiment;
use crate::harness::{evaluate_model, xor_demo, ExperimentConfig, Prepared};
use crate::inverse::enumerate_preimage;
use crate::nn::Network;

const SYNOPSIS: &str = "usage: symcor <datalog eval PROGRAM BITS | invert PROGRAM LABEL | train --config FILE | \
                        eval --checkpoint FILE --config FILE | xor-demo | heatmap --report CSV>";

#[derive(Debug, Parser)]
#[command(name = "symcor", about = "Neural networks with a Datalog symbolic layer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Datalog queries.
    Datalog {
        #[command(subcommand)]
        command: DatalogCommand,
    },
    /// List every input assignment that derives a label.
    Invert {
        /// Program file, or one of the built-ins `addition`, `subtraction`, `xor`.
        program: String,
        /// Output position or atom text such as `sum(8)`.
        label: String,
    },
    /// Train every configured seed and write run reports.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "symcor-out")]
        out: PathBuf,
        /// Worker threads for independent seeds.
        #[arg(long, default_value_t = 1)]
        parallel_seeds: usize,
        /// Save the first seed's selected network here.
        #[arg(long)]
        save_checkpoint: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on the configured test set.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Also write `confusion_eval.csv` here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Output-correct but symbol-incorrect model on two-bit xor.
    XorDemo,
    /// Row-normalized confusion rates from a run report or confusion CSV.
    Heatmap {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum DatalogCommand {
    /// Evaluate a program on an input bitstring and print the derived output atoms.
    Eval {
        program: String,
        bits: String,
        /// Print the output bitstring instead of atoms.
        #[arg(long)]
        bits_out: bool,
    },
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.into())
    }
}

/// Runs one invocation; `argv[0]` is the program name.
pub fn main_dispatch(argv: &[String], stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                let _ = writeln!(stderr, "{SYNOPSIS}");
                return 1;
            }
            let first = e.to_string().lines().next().unwrap_or_default().to_string();
            let _ = writeln!(stderr, "{SYNOPSIS} ({})", first.trim_start_matches("error: "));
            return 1;
        }
    };
    match run(cli.command, stdout) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "{SYNOPSIS} ({msg})");
            1
        }
        Err(Failure::Data(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}

fn run(command: Command, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    match command {
        Command::Datalog {
            command: DatalogCommand::Eval { program, bits, bits_out },
        } => {
            let p = load_program(&program)?;
            let input: Bitstring = bits.parse().map_err(Error::from)?;
            let output = p.evaluate(&input).map_err(Error::from)?;
            if bits_out {
                writeln!(out, "{output}")?;
            } else {
                for i in output.ones() {
                    writeln!(out, "{}", p.atom_text(&p.output_enum()[i]))?;
                }
            }
        }
        Command::Invert { program, label } => {
            let p = load_program(&program)?;
            let pos = parse_label(&p, &label)?;
            let spec = GroupSpec::by_input_relation(&p);
            let ps = enumerate_preimage(&p, pos, &spec)?;
            for choice in ps.choices() {
                writeln!(out, "{}", describe_choice(&p, &spec, choice))?;
            }
        }
        Command::Train {
            config,
            out: dir,
            parallel_seeds,
            save_checkpoint,
        } => {
            let cfg = load_config(&config)?;
            let program = cfg.load_program()?;
            let data = Prepared::new(&cfg, &program)?;
            let runs = run_experiment(&cfg, &data, parallel_seeds)?;
            let reports: Vec<_> = runs.iter().map(|o| o.report.clone()).collect();
            write_run_files(&dir, &reports)?;
            if cfg.trace_pseudolabels {
                for o in &runs {
                    let f = fs::File::create(dir.join(format!("trace_{}.csv", o.report.seed)))?;
                    o.synth_state.write_trace_csv(f)?;
                }
            }
            if let (Some(path), Some(first)) = (save_checkpoint, runs.first()) {
                first.network.save(path)?;
            }
            for r in &reports {
                writeln!(
                    out,
                    "seed {} {}: epoch {} output_acc {} symbol_acc {}",
                    r.seed,
                    r.synthesizer,
                    r.epoch_selected,
                    fmt_f64(r.output_acc),
                    fmt_f64(r.symbol_acc)
                )?;
            }
        }
        Command::Eval {
            checkpoint,
            config,
            out: dir,
        } => {
            let cfg = load_config(&config)?;
            let program = cfg.load_program()?;
            let data = Prepared::new(&cfg, &program)?;
            let net = Network::load(&checkpoint, &cfg.network_config())?;
            let eval = evaluate_model(&net, &data.table, &data.test)?;
            writeln!(out, "output_acc {}", fmt_f64(eval.output_acc()))?;
            writeln!(out, "symbol_acc {}", fmt_f64(eval.symbol_acc()))?;
            if let Some(dir) = dir {
                fs::create_dir_all(&dir)?;
                write_confusion_csv(&eval.confusion, fs::File::create(dir.join("confusion_eval.csv"))?)?;
            }
        }
        Command::XorDemo => {
            writeln!(out, "{}", xor_demo()?)?;
        }
        Command::Heatmap { report, out: dest } => {
            if !report.exists() {
                return Err(Failure::Usage(format!("no such report: {}", report.display())));
            }
            let rates = normalize_confusion(&pooled_confusion(&report)?);
            match dest {
                Some(path) => write_rates_csv(&rates, fs::File::create(path)?)?,
                None => write_rates_csv(&rates, &mut *out)?,
            }
        }
    }
    Ok(())
}

/// A program file, falling back to the built-in program of the same name.
fn load_program(name: &str) -> std::result::Result<Program, Failure> {
    let path = Path::new(name);
    if path.exists() {
        let text = fs::read_to_string(path)?;
        return Ok(Program::parse(&text).map_err(Error::from)?);
    }
    match name.trim_end_matches(".dl") {
        "addition" => Ok(addition_program()),
        "subtraction" => Ok(subtraction_program()),
        "xor" => Ok(xor_program()),
        _ => Err(Failure::Usage(format!("no such program: {name}"))),
    }
}

fn parse_label(p: &Program, label: &str) -> std::result::Result<usize, Failure> {
    let pos = match label.parse::<usize>() {
        Ok(i) => i,
        Err(_) => p
            .output_position_by_text(label)
            .ok_or_else(|| Failure::Usage(format!("unknown output atom {label}")))?,
    };
    if pos >= p.output_len() {
        return Err(Error::LabelOutOfRange {
            label: pos,
            outputs: p.output_len(),
        }
        .into());
    }
    Ok(pos)
}

/// `relation=args` for the input atom selected in each group.
fn describe_choice(p: &Program, spec: &GroupSpec, choice: &[usize]) -> String {
    spec.groups()
        .iter()
        .zip(choice)
        .map(|(members, &c)| {
            let atom = &p.input_enum()[members[c]];
            let args: Vec<String> = atom.args.iter().map(u32::to_string).collect();
            format!("{}={}", p.relation(atom.relation).name, args.join(","))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn load_config(path: &Path) -> std::result::Result<ExperimentConfig, Failure> {
    if !path.is_file() {
        return Err(Failure::Usage(format!("no such config: {}", path.display())));
    }
    Ok(ExperimentConfig::load(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let argv: Vec<String> = std::iter::once("symcor").chain(args.iter().copied()).map(String::from).collect();
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = main_dispatch(&argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn datalog_eval_prints_atoms() {
        assert_eq!(call(&["datalog", "eval", "addition.dl", "00010000000000010000"]), (0, "sum(8)\n".into(), String::new()));
        let (code, out, _) = call(&["datalog", "eval", "addition", "00010000000000010000", "--bits-out"]);
        assert_eq!(code, 0);
        assert_eq!(out.trim().len(), 19);
        assert_eq!(out.trim().find('1'), Some(8));
    }

    #[test]
    fn invert_lists_candidates() {
        assert_eq!(call(&["invert", "addition.dl", "0"]), (0, "digit1=0 digit2=0\n".into(), String::new()));
        let (code, out, _) = call(&["invert", "addition", "sum(2)"]);
        assert_eq!(code, 0);
        assert_eq!(out, "digit1=0 digit2=2\ndigit1=1 digit2=1\ndigit1=2 digit2=0\n");
    }

    #[test]
    fn exit_codes() {
        let (code, _, err) = call(&["train", "--config", "missing.json"]);
        assert_eq!(code, 1);
        assert_eq!(err.lines().count(), 1);
        assert!(err.starts_with("usage: symcor"));
        assert_eq!(call(&["frobnicate"]).0, 1);
        assert_eq!(call(&[]).0, 1);
        assert_eq!(call(&["invert", "addition", "0", "--bogus"]).0, 1);
        assert_eq!(call(&["datalog", "eval", "addition", "0101"]).0, 2);
        assert_eq!(call(&["datalog", "eval", "addition", "01x1"]).0, 2);
        assert_eq!(call(&["invert", "addition", "19"]).0, 2);
        assert_eq!(call(&["--help"]).0, 0);
    }

    #[test]
    fn xor_demo_reports_counts() {
        let (code, out, _) = call(&["xor-demo"]);
        assert_eq!(code, 0);
        assert!(out.contains("output correct 4/4, symbol correct 0/4"));
    }
}
