//! Output and symbol accuracy, confusion counts, and the implication audit.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::Result;
use crate::grounding::{hard_choice, GroupSpec};
use crate::harness::data::Sample;
use crate::nn::{Image, Network};
use crate::semiring::AssignmentTable;

/// Samples per forward pass during evaluation.
const EVAL_CHUNK: usize = 256;

static EVALUATIONS: AtomicU64 = AtomicU64::new(0);
static VIOLATIONS: AtomicU64 = AtomicU64::new(0);

/// `(evaluations, implication violations)` summed over every call to
/// [`evaluate_model`] in this process.
pub fn implication_audit() -> (u64, u64) {
    (EVALUATIONS.load(Ordering::SeqCst), VIOLATIONS.load(Ordering::SeqCst))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub count: usize,
    pub output_correct: usize,
    pub symbol_correct: usize,
    /// `confusion[true][predicted]`, pooled over image positions.
    pub confusion: Vec<Vec<u64>>,
    /// Points that are symbol correct but not output correct.
    pub implication_violations: usize,
}

impl Evaluation {
    pub fn output_acc(&self) -> f64 {
        ratio(self.output_correct, self.count)
    }

    pub fn symbol_acc(&self) -> f64 {
        ratio(self.symbol_correct, self.count)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Scores `net` on `samples`: output correct when the hard-grounded
/// prediction derives the label, symbol correct when it equals the
/// ground-truth symbols.
pub fn evaluate_model(net: &Network, table: &AssignmentTable, samples: &[Sample]) -> Result<Evaluation> {
    let spec = table.spec();
    let classes = spec.max_width();
    let mut eval = Evaluation {
        count: samples.len(),
        output_correct: 0,
        symbol_correct: 0,
        confusion: vec![vec![0; classes]; classes],
        implication_violations: 0,
    };
    for chunk in samples.chunks(EVAL_CHUNK) {
        let batch: Vec<&[Image]> = chunk.iter().map(|s| s.images.as_slice()).collect();
        let (logits, _) = net.forward(&batch)?;
        for (s, z) in chunk.iter().zip(logits.rows()) {
            let z = z.as_slice().expect("logit rows are contiguous");
            let choice = hard_choice(z, spec);
            let out_ok = table.derives(&choice, s.label);
            let sym_ok = choice == truth(s, spec);
            eval.output_correct += usize::from(out_ok);
            eval.symbol_correct += usize::from(sym_ok);
            eval.implication_violations += usize::from(sym_ok && !out_ok);
            for (&t, &p) in s.digits.iter().zip(&choice) {
                eval.confusion[t][p] += 1;
            }
        }
    }
    EVALUATIONS.fetch_add(1, Ordering::SeqCst);
    VIOLATIONS.fetch_add(eval.implication_violations as u64, Ordering::SeqCst);
    Ok(eval)
}

fn truth(s: &Sample, spec: &GroupSpec) -> Vec<usize> {
    spec.choice_of(&s.alpha).unwrap_or_else(|| s.digits.clone())
}
