//! A model that is output correct everywhere yet never symbol correct.
//!
//! The program computes the xor of two bits shown as glyph images. The
//! network reads every bit inverted; since `!a ^ !b == a ^ b`, the inverted
//! reading still yields the right output on all four inputs.

use std::fmt;

use crate::datalog::{xor_program, Program};
use crate::error::Result;
use crate::grounding::{hard_choice, GroupSpec};
use crate::harness::data::Sample;
use crate::harness::glyphs::{prototype, prototype_classifier};
use crate::harness::metrics::{evaluate_model, Evaluation};
use crate::nn::Network;
use crate::semiring::AssignmentTable;

#[derive(Debug, Clone, PartialEq)]
pub struct XorRow {
    pub bits: [usize; 2],
    pub predicted: [usize; 2],
    pub output: usize,
    pub expected: usize,
    pub output_correct: bool,
    pub symbol_correct: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct XorReport {
    pub rows: Vec<XorRow>,
    pub evaluation: Evaluation,
}

impl XorReport {
    pub fn output_correct(&self) -> usize {
        self.evaluation.output_correct
    }

    pub fn symbol_correct(&self) -> usize {
        self.evaluation.symbol_correct
    }
}

impl fmt::Display for XorReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "input  predicted  output  expected  output_ok  symbol_ok")?;
        for r in &self.rows {
            writeln!(
                f,
                "({},{})  ({},{})      {}       {}         {:<9}  {}",
                r.bits[0], r.bits[1], r.predicted[0], r.predicted[1], r.output, r.expected, r.output_correct, r.symbol_correct
            )?;
        }
        write!(
            f,
            "output correct {}/{}, symbol correct {}/{}",
            self.output_correct(),
            self.rows.len(),
            self.symbol_correct(),
            self.rows.len()
        )
    }
}

/// The four bit pairs, each drawn with the `0` and `1` glyphs.
pub fn xor_dataset(program: &Program) -> Result<Vec<Sample>> {
    let spec = GroupSpec::by_input_relation(program);
    let mut out = Vec::new();
    for a in 0..2 {
        for b in 0..2 {
            let alpha = spec.bitstring_of(&[a, b]);
            let label = program.evaluate(&alpha)?.ones().next().expect("xor derives an output");
            out.push(Sample {
                images: vec![prototype(a), prototype(b)],
                label,
                alpha,
                digits: vec![a, b],
            });
        }
    }
    Ok(out)
}

/// Classifier that reports glyph `0` as bit 1 and glyph `1` as bit 0.
pub fn negating_network() -> Network {
    prototype_classifier(&[(0, 1), (1, 0)], 2, 2)
}

pub fn xor_demo() -> Result<XorReport> {
    let program = xor_program();
    let spec = GroupSpec::by_input_relation(&program);
    let table = AssignmentTable::build(&program, &spec)?;
    let data = xor_dataset(&program)?;
    let net = negating_network();
    let evaluation = evaluate_model(&net, &table, &data)?;
    let batch: Vec<_> = data.iter().map(|s| s.images.as_slice()).collect();
    let (logits, _) = net.forward(&batch)?;
    let rows = data
        .iter()
        .zip(logits.rows())
        .map(|(s, z)| {
            let choice = hard_choice(z.as_slice().expect("contiguous"), &spec);
            let outputs = table.outputs(table.index_of(&choice));
            let output = outputs.first().copied().unwrap_or(usize::MAX);
            XorRow {
                bits: [s.digits[0], s.digits[1]],
                predicted: [choice[0], choice[1]],
                output,
                expected: s.label,
                output_correct: table.derives(&choice, s.label),
                symbol_correct: choice == s.digits,
            }
        })
        .collect();
    Ok(XorReport { rows, evaluation })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverted_reading_is_output_but_not_symbol_correct() {
        let r = xor_demo().unwrap();
        assert_eq!((r.output_correct(), r.symbol_correct()), (4, 0));
        let row = r.rows.iter().find(|r| r.bits == [0, 1]).unwrap();
        assert_eq!(row.predicted, [1, 0]);
        assert_eq!((row.output, row.expected), (1, 1));
        for row in &r.rows {
            assert_eq!(row.predicted, [1 - row.bits[0], 1 - row.bits[1]]);
            assert!(row.output_correct && !row.symbol_correct);
        }
        assert!(r.to_string().ends_with("output correct 4/4, symbol correct 0/4"));
    }
}
