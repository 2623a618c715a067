//! Translation between neural logits and symbols.
//!
//! Input facts are partitioned into mutually exclusive categorical groups.
//! The hard grounding picks the per-group argmax; the smooth grounding applies
//! a per-group softmax and yields a probabilistic input database.

use crate::datalog::{Bitstring, Program};
use crate::error::{Error, Result};

/// Tolerance on per-group probability sums.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Ordered partition of the input-fact indices `0..n` into categorical groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupSpec {
    groups: Vec<Vec<usize>>,
    n: usize,
}

impl GroupSpec {
    pub fn new(groups: Vec<Vec<usize>>, n: usize) -> Result<GroupSpec> {
        let mut seen = vec![false; n];
        for (g, members) in groups.iter().enumerate() {
            if members.is_empty() {
                return Err(Error::InvalidGroups(format!("group {g} is empty")));
            }
            for &i in members {
                if i >= n {
                    return Err(Error::InvalidGroups(format!("index {i} out of range 0..{n}")));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::InvalidGroups(format!("index {i} appears twice")));
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidGroups(format!("index {i} belongs to no group")));
        }
        Ok(GroupSpec { groups, n })
    }

    /// Consecutive groups of the given widths.
    pub fn contiguous(widths: &[usize]) -> GroupSpec {
        let mut groups = Vec::with_capacity(widths.len());
        let mut start = 0;
        for &w in widths {
            groups.push((start..start + w).collect());
            start += w;
        }
        GroupSpec { groups, n: start }
    }

    /// One group per input relation, in order of first appearance in the
    /// input enumeration.
    pub fn by_input_relation(program: &Program) -> GroupSpec {
        let mut order: Vec<usize> = Vec::new();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (i, atom) in program.input_enum().iter().enumerate() {
            match order.iter().position(|&r| r == atom.relation) {
                Some(g) => groups[g].push(i),
                None => {
                    order.push(atom.relation);
                    groups.push(vec![i]);
                }
            }
        }
        GroupSpec {
            groups,
            n: program.input_len(),
        }
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn input_len(&self) -> usize {
        self.n
    }

    pub fn width(&self, group: usize) -> usize {
        self.groups[group].len()
    }

    pub fn max_width(&self) -> usize {
        self.groups.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Number of one-hot-per-group bitstrings, `∏ |group|`.
    pub fn assignment_count(&self) -> u128 {
        self.groups
            .iter()
            .map(|g| g.len() as u128)
            .fold(1u128, |acc, w| acc.saturating_mul(w))
    }

    /// Bitstring selecting member `choice[g]` of each group `g`.
    pub fn bitstring_of(&self, choice: &[usize]) -> Bitstring {
        let mut b = Bitstring::zeros(self.n);
        for (g, &c) in choice.iter().enumerate() {
            b.set(self.groups[g][c], true);
        }
        b
    }

    /// Per-group member positions if `bits` is one-hot in every group.
    pub fn choice_of(&self, bits: &Bitstring) -> Option<Vec<usize>> {
        if bits.len() != self.n {
            return None;
        }
        let mut choice = Vec::with_capacity(self.groups.len());
        for members in &self.groups {
            let mut set = members.iter().enumerate().filter(|(_, &i)| bits.get(i));
            let (pos, _) = set.next()?;
            if set.next().is_some() {
                return None;
            }
            choice.push(pos);
        }
        Some(choice)
    }

    pub fn is_one_hot(&self, bits: &Bitstring) -> bool {
        self.choice_of(bits).is_some()
    }

    fn check_len(&self, what: &'static str, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::LengthMismatch {
                what,
                expected: self.n,
                found: len,
            });
        }
        Ok(())
    }
}

/// Probabilistic input database: one probability per input fact, normalized
/// within each group.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(probs: Vec<f64>, spec: &GroupSpec) -> Result<ProbVector> {
        spec.check_len("probability vector", probs.len())?;
        for (g, members) in spec.groups.iter().enumerate() {
            let sum: f64 = members.iter().map(|&i| probs[i]).sum();
            let in_range = members.iter().all(|&i| (0.0..=1.0).contains(&probs[i]));
            if !in_range || (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
                return Err(Error::NotNormalized { group: g, sum });
            }
        }
        Ok(ProbVector(probs))
    }

    /// Degenerate database putting all mass on a one-hot-per-group bitstring.
    pub fn from_bits(bits: &Bitstring, spec: &GroupSpec) -> Result<ProbVector> {
        if !spec.is_one_hot(bits) {
            return Err(Error::MalformedSymbol);
        }
        Ok(ProbVector(
            bits.bits().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        ))
    }

    /// Skips validation; for evaluating the multilinear polynomial off the simplex.
    pub fn unchecked(probs: Vec<f64>) -> ProbVector {
        ProbVector(probs)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Per-group softmax, the smooth grounding.
pub fn smooth_ground(logits: &[f64], spec: &GroupSpec) -> Result<ProbVector> {
    spec.check_len("logits", logits.len())?;
    let mut probs = vec![0.0; logits.len()];
    for members in &spec.groups {
        let max = members
            .iter()
            .map(|&i| logits[i])
            .fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for &i in members {
            let e = (logits[i] - max).exp();
            probs[i] = e;
            total += e;
        }
        for &i in members {
            probs[i] /= total;
        }
    }
    Ok(ProbVector(probs))
}

/// Per-group log-softmax.
pub fn log_softmax(logits: &[f64], spec: &GroupSpec) -> Result<Vec<f64>> {
    spec.check_len("logits", logits.len())?;
    let mut out = vec![0.0; logits.len()];
    for members in &spec.groups {
        let max = members
            .iter()
            .map(|&i| logits[i])
            .fold(f64::NEG_INFINITY, f64::max);
        let lse = max + members.iter().map(|&i| (logits[i] - max).exp()).sum::<f64>().ln();
        for &i in members {
            out[i] = logits[i] - lse;
        }
    }
    Ok(out)
}

/// Pulls a gradient with respect to probabilities back through the per-group
/// softmax: `dz_i = p_i (dp_i - Σ_{j in group} p_j dp_j)`.
pub fn softmax_backward(probs: &ProbVector, grad_probs: &[f64], spec: &GroupSpec) -> Vec<f64> {
    let p = probs.as_slice();
    let mut out = vec![0.0; p.len()];
    for members in &spec.groups {
        let dot: f64 = members.iter().map(|&i| p[i] * grad_probs[i]).sum();
        for &i in members {
            out[i] = p[i] * (grad_probs[i] - dot);
        }
    }
    out
}

/// Per-group argmax one-hot, ties to the lowest index. The deployment-time grounding.
pub fn hard_ground(logits: &[f64], spec: &GroupSpec) -> Result<Bitstring> {
    spec.check_len("logits", logits.len())?;
    let mut bits = Bitstring::zeros(logits.len());
    for members in &spec.groups {
        let mut best = members[0];
        for &i in &members[1..] {
            if logits[i] > logits[best] {
                best = i;
            }
        }
        bits.set(best, true);
    }
    Ok(bits)
}

/// Per-group argmax positions (within each group), ties to the lowest index.
pub fn hard_choice(logits: &[f64], spec: &GroupSpec) -> Vec<usize> {
    spec.groups
        .iter()
        .map(|members| {
            let mut best = 0;
            for k in 1..members.len() {
                if logits[members[k]] > logits[members[best]] {
                    best = k;
                }
            }
            best
        })
        .collect()
}
