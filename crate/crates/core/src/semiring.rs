//! Smoothed evaluation over probabilistic input databases.
//!
//! With independent categorical groups, the probability of an output fact is
//! a multilinear polynomial in the input probabilities:
//!
//! ```text
//! P(out_j) = Σ_A  [∏_g p(A_g)] · [evaluate(A) has bit j]
//! ```
//!
//! where `A` ranges over the one-hot-per-group assignments. Every monomial
//! belongs to one assignment, so the partial derivative with respect to
//! `p(A_g)` is the product of the other factors. The boolean evaluation of
//! each assignment is computed once and cached in an [`AssignmentTable`].

use ndarray::Array2;

use crate::datalog::{Bitstring, Program};
use crate::error::{Error, Result};
use crate::grounding::{smooth_ground, softmax_backward, GroupSpec, ProbVector};

/// Upper bound on `∏ |group|` for exhaustive enumeration.
pub const ASSIGNMENT_LIMIT: usize = 1_000_000;

/// Floor applied to the label probability inside the log.
pub const NLL_FLOOR: f64 = 1e-12;

/// Boolean program outputs for every joint assignment, in canonical order
/// (lexicographic by group, first group most significant).
#[derive(Debug, Clone)]
pub struct AssignmentTable {
    spec: GroupSpec,
    output_len: usize,
    digest: [u8; 32],
    choices: Vec<usize>,
    outputs: Vec<Vec<usize>>,
}

impl AssignmentTable {
    pub fn build(program: &Program, spec: &GroupSpec) -> Result<AssignmentTable> {
        if spec.input_len() != program.input_len() {
            return Err(Error::LengthMismatch {
                what: "group specification",
                expected: program.input_len(),
                found: spec.input_len(),
            });
        }
        let count = spec.assignment_count();
        if count > ASSIGNMENT_LIMIT as u128 {
            return Err(Error::AssignmentGuard {
                count,
                limit: ASSIGNMENT_LIMIT,
            });
        }
        let count = count as usize;
        let groups = spec.group_count();
        let mut choices = Vec::with_capacity(count * groups);
        let mut outputs = Vec::with_capacity(count);
        let mut choice = vec![0usize; groups];
        for _ in 0..count {
            let bits = spec.bitstring_of(&choice);
            let out = program.evaluate(&bits)?;
            outputs.push(out.ones().collect());
            choices.extend_from_slice(&choice);
            // Odometer increment, last group fastest.
            for g in (0..groups).rev() {
                choice[g] += 1;
                if choice[g] < spec.width(g) {
                    break;
                }
                choice[g] = 0;
            }
        }
        Ok(AssignmentTable {
            spec: spec.clone(),
            output_len: program.output_len(),
            digest: program.digest(),
            choices,
            outputs,
        })
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn output_len(&self) -> usize {
        self.output_len
    }

    pub fn program_digest(&self) -> [u8; 32] {
        self.digest
    }

    /// Per-group member positions of assignment `a`.
    pub fn choice(&self, a: usize) -> &[usize] {
        let g = self.spec.group_count();
        &self.choices[a * g..(a + 1) * g]
    }

    /// Output positions set by the program on assignment `a`.
    pub fn outputs(&self, a: usize) -> &[usize] {
        &self.outputs[a]
    }

    pub fn bitstring(&self, a: usize) -> Bitstring {
        self.spec.bitstring_of(self.choice(a))
    }

    /// Canonical index of a per-group choice.
    pub fn index_of(&self, choice: &[usize]) -> usize {
        choice
            .iter()
            .enumerate()
            .fold(0, |acc, (g, &c)| acc * self.spec.width(g) + c)
    }

    /// Boolean evaluation through the cache; `bits` must be one-hot per group.
    pub fn evaluate(&self, bits: &Bitstring) -> Result<Bitstring> {
        let choice = self.spec.choice_of(bits).ok_or(Error::MalformedSymbol)?;
        Ok(Bitstring::with_ones(
            self.output_len,
            self.outputs(self.index_of(&choice)),
        ))
    }

    /// Whether the program sets output `label` on the given per-group choice.
    pub fn derives(&self, choice: &[usize], label: usize) -> bool {
        self.outputs(self.index_of(choice)).contains(&label)
    }

    /// Output probabilities and their exact Jacobian with respect to the input
    /// probabilities.
    pub fn marginalize(&self, pv: &ProbVector) -> ProbOutput {
        let p = pv.as_slice();
        let groups = self.spec.groups();
        let g_count = groups.len();
        let n = self.spec.input_len();
        let mut out_probs = vec![0.0; self.output_len];
        let mut jacobian = Array2::<f64>::zeros((self.output_len, n));
        let mut factor = vec![0.0; g_count];
        let mut idx = vec![0usize; g_count];
        let mut prefix = vec![1.0; g_count + 1];
        for a in 0..self.len() {
            let outs = &self.outputs[a];
            if outs.is_empty() {
                continue;
            }
            let choice = self.choice(a);
            for g in 0..g_count {
                idx[g] = groups[g][choice[g]];
                factor[g] = p[idx[g]];
                prefix[g + 1] = prefix[g] * factor[g];
            }
            let weight = prefix[g_count];
            let mut suffix = 1.0;
            for g in (0..g_count).rev() {
                // Product of every factor except group g's.
                let partial = prefix[g] * suffix;
                for &j in outs {
                    jacobian[[j, idx[g]]] += partial;
                }
                suffix *= factor[g];
            }
            for &j in outs {
                out_probs[j] += weight;
            }
        }
        ProbOutput {
            out_probs,
            jacobian,
        }
    }
}

/// Output-fact probabilities with `∂out_probs/∂probs` (q × n).
#[derive(Debug, Clone, PartialEq)]
pub struct ProbOutput {
    pub out_probs: Vec<f64>,
    pub jacobian: Array2<f64>,
}

/// Smoothed evaluation of `program` on `pv`. Builds a fresh assignment table;
/// use [`AssignmentTable::marginalize`] to reuse one across calls.
pub fn prob_evaluate(program: &Program, pv: &ProbVector, spec: &GroupSpec) -> Result<ProbOutput> {
    // Re-validate: the vector may come from another spec of the same length.
    let pv = ProbVector::new(pv.as_slice().to_vec(), spec)?;
    Ok(AssignmentTable::build(program, spec)?.marginalize(&pv))
}

/// Negative log-likelihood of output `label` and its gradient with respect to
/// the logits that produced `pv` through the per-group softmax.
pub fn output_loss_and_input_grads(
    po: &ProbOutput,
    pv: &ProbVector,
    label: usize,
    spec: &GroupSpec,
) -> Result<(f64, Vec<f64>)> {
    let q = po.out_probs.len();
    if label >= q {
        return Err(Error::LabelOutOfRange { label, outputs: q });
    }
    let prob = po.out_probs[label];
    let loss = -prob.max(NLL_FLOOR).ln();
    let n = spec.input_len();
    let grad_probs: Vec<f64> = if prob > NLL_FLOOR {
        po.jacobian.row(label).iter().map(|d| -d / prob).collect()
    } else {
        vec![0.0; n]
    };
    Ok((loss, softmax_backward(pv, &grad_probs, spec)))
}

/// Full smooth-grounding → marginalization → NLL chain for one sample.
pub fn nll_and_grads(table: &AssignmentTable, logits: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    let spec = table.spec();
    let pv = smooth_ground(logits, spec)?;
    let po = table.marginalize(&pv);
    output_loss_and_input_grads(&po, &pv, label, spec)
}
