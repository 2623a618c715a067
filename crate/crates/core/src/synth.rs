//! Synthesizers: fuse neural predictions `z` and the label `y` into a loss
//! and its gradient `G_z` at the neural-symbolic boundary.
//!
//! * **Ideal** supervises directly with the ground-truth symbol.
//! * **Multiple** differentiates the smoothed program, weighting every
//!   derivation of `y` by its predicted probability.
//! * **Closest** trains toward the preimage member the network already finds
//!   most likely.
//! * **Random** trains toward a pseudolabel that performs an annealed random
//!   walk through the preimage, one step per epoch.

use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datalog::{Bitstring, Program};
use crate::error::{Error, Result};
use crate::grounding::{log_softmax, GroupSpec};
use crate::inverse::{closest_index, walk_step_index, AnnealSchedule, PreimageCache};
use crate::semiring::{nll_and_grads, AssignmentTable};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SynthesizerKind {
    Ideal,
    Multiple,
    Closest,
    Random {
        #[serde(default)]
        schedule: AnnealSchedule,
    },
}

impl SynthesizerKind {
    pub fn random() -> Self {
        SynthesizerKind::Random {
            schedule: AnnealSchedule::default(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SynthesizerKind::Ideal => "ideal",
            SynthesizerKind::Multiple => "multiple",
            SynthesizerKind::Closest => "closest",
            SynthesizerKind::Random { .. } => "random",
        }
    }

    /// Whether the synthesizer commits to one pseudolabel per sample.
    pub fn uses_pseudolabels(&self) -> bool {
        matches!(self, SynthesizerKind::Closest | SynthesizerKind::Random { .. })
    }
}

/// Per-group cross-entropy of `softmax(z)` against a one-hot target given as
/// per-group positions. The gradient is `softmax(z) - target`.
pub fn cross_entropy_to_choice(z: &[f64], choice: &[usize], spec: &GroupSpec) -> Result<(f64, Vec<f64>)> {
    let log_probs = log_softmax(z, spec)?;
    let mut grad: Vec<f64> = log_probs.iter().map(|lp| lp.exp()).collect();
    let mut loss = 0.0;
    for (members, &c) in spec.groups().iter().zip(choice) {
        loss -= log_probs[members[c]];
        grad[members[c]] -= 1.0;
    }
    Ok((loss, grad))
}

pub fn synthesize_ideal(z: &[f64], alpha: &Bitstring, spec: &GroupSpec) -> Result<(f64, Vec<f64>)> {
    let choice = spec.choice_of(alpha).ok_or(Error::MalformedSymbol)?;
    cross_entropy_to_choice(z, &choice, spec)
}

pub fn synthesize_multiple(z: &[f64], label: usize, table: &AssignmentTable) -> Result<(f64, Vec<f64>)> {
    nll_and_grads(table, z, label)
}

/// Returns the loss, the gradient, and the chosen pseudolabel.
pub fn synthesize_closest(
    z: &[f64],
    label: usize,
    cache: &PreimageCache,
    spec: &GroupSpec,
) -> Result<(f64, Vec<f64>, Bitstring)> {
    let ps = cache.get(label)?;
    let k = closest_index(ps, z, spec)?;
    let (loss, grad) = cross_entropy_to_choice(z, &ps.choices()[k], spec)?;
    Ok((loss, grad, ps.candidates()[k].clone()))
}

/// Per-sample pseudolabel memory, shared bookkeeping for Closest and Random.
#[derive(Debug, Clone)]
pub struct SynthesizerState {
    rng: ChaCha8Rng,
    /// Current pseudolabel of each sample, as an index into its preimage.
    current: Vec<Option<usize>>,
    first: Vec<Option<usize>>,
    changed: Vec<bool>,
    trace: Option<Vec<TraceRow>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub epoch: usize,
    pub sample: usize,
    pub choice: Vec<usize>,
}

impl SynthesizerState {
    pub fn new(seed: u64) -> Self {
        SynthesizerState {
            rng: ChaCha8Rng::seed_from_u64(seed),
            current: Vec::new(),
            first: Vec::new(),
            changed: Vec::new(),
            trace: None,
        }
    }

    /// Record every pseudolabel assignment for later export.
    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn pseudolabel(&self, sample: usize) -> Option<usize> {
        self.current.get(sample).copied().flatten()
    }

    fn record(&mut self, sample: usize, epoch: usize, k: usize, choice: &[usize]) {
        if self.current.len() <= sample {
            self.current.resize(sample + 1, None);
            self.first.resize(sample + 1, None);
            self.changed.resize(sample + 1, false);
        }
        self.current[sample] = Some(k);
        match self.first[sample] {
            None => self.first[sample] = Some(k),
            Some(f) if f != k => self.changed[sample] = true,
            _ => {}
        }
        if let Some(trace) = &mut self.trace {
            trace.push(TraceRow {
                epoch,
                sample,
                choice: choice.to_vec(),
            });
        }
    }

    /// Fraction of samples whose pseudolabel never moved from the first one
    /// assigned. `None` before any pseudolabel is recorded.
    pub fn stability(&self) -> Option<f64> {
        let seen = self.first.iter().filter(|f| f.is_some()).count();
        if seen == 0 {
            return None;
        }
        let stable = self
            .first
            .iter()
            .zip(&self.changed)
            .filter(|(f, c)| f.is_some() && !**c)
            .count();
        Some(stable as f64 / seen as f64)
    }

    pub fn trace(&self) -> Option<&[TraceRow]> {
        self.trace.as_deref()
    }

    /// Writes `epoch,sample,pseudolabel` rows, the pseudolabel as
    /// space-separated per-group positions.
    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epoch", "sample", "pseudolabel"])?;
        for row in self.trace.iter().flatten() {
            let choice: Vec<String> = row.choice.iter().map(|c| c.to_string()).collect();
            w.write_record([
                row.epoch.to_string(),
                row.sample.to_string(),
                choice.join(" "),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One step of the Random synthesizer for sample `sample`: initialize its
/// pseudolabel uniformly from the preimage on first sight, otherwise take one
/// annealed walk step; then train toward it.
#[allow(clippy::too_many_arguments)]
pub fn synthesize_random(
    z: &[f64],
    label: usize,
    cache: &PreimageCache,
    spec: &GroupSpec,
    state: &mut SynthesizerState,
    sample: usize,
    epoch: usize,
    schedule: &AnnealSchedule,
) -> Result<(f64, Vec<f64>, Bitstring)> {
    let ps = cache.get(label)?;
    let k = match state.pseudolabel(sample) {
        Some(prev) if prev < ps.len() => {
            let log_probs = log_softmax(z, spec)?;
            walk_step_index(ps, prev, &log_probs, schedule.epsilon(epoch), spec, &mut state.rng)
        }
        Some(_) => return Err(Error::NotInPreimage { label }),
        None => state.rng.random_range(0..ps.len()),
    };
    state.record(sample, epoch, k, &ps.choices()[k]);
    let (loss, grad) = cross_entropy_to_choice(z, &ps.choices()[k], spec)?;
    Ok((loss, grad, ps.candidates()[k].clone()))
}

/// Everything a synthesizer may look at for one training sample.
#[derive(Debug, Clone, Copy)]
pub struct SampleContext<'a> {
    /// Stable position of the sample in the training set.
    pub index: usize,
    pub logits: &'a [f64],
    pub label: usize,
    pub alpha: Option<&'a Bitstring>,
}

/// A configured synthesizer bound to one program, with its caches and state.
#[derive(Debug, Clone)]
pub struct Synthesizer {
    kind: SynthesizerKind,
    table: Arc<AssignmentTable>,
    cache: Arc<PreimageCache>,
    state: SynthesizerState,
}

impl Synthesizer {
    /// `has_symbol_labels` states whether the training data carries ground
    /// truth symbols; the Ideal synthesizer requires them.
    pub fn new(
        kind: SynthesizerKind,
        table: Arc<AssignmentTable>,
        cache: Arc<PreimageCache>,
        seed: u64,
        has_symbol_labels: bool,
    ) -> Result<Synthesizer> {
        if kind == SynthesizerKind::Ideal && !has_symbol_labels {
            return Err(Error::InvalidConfig(
                "the ideal synthesizer needs ground-truth symbols".into(),
            ));
        }
        if table.program_digest() != cache.program_digest() {
            return Err(Error::InvalidConfig(
                "assignment table and preimage cache come from different programs".into(),
            ));
        }
        Ok(Synthesizer {
            kind,
            table,
            cache,
            state: SynthesizerState::new(seed),
        })
    }

    /// Builds the caches for `program` eagerly.
    pub fn for_program(
        kind: SynthesizerKind,
        program: &Program,
        spec: &GroupSpec,
        seed: u64,
        has_symbol_labels: bool,
    ) -> Result<Synthesizer> {
        let table = Arc::new(AssignmentTable::build(program, spec)?);
        let cache = Arc::new(PreimageCache::build(&table));
        Self::new(kind, table, cache, seed, has_symbol_labels)
    }

    pub fn kind(&self) -> SynthesizerKind {
        self.kind
    }

    pub fn state(&self) -> &SynthesizerState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut SynthesizerState {
        &mut self.state
    }

    pub fn spec(&self) -> &GroupSpec {
        self.table.spec()
    }

    pub fn synthesize(&mut self, ctx: SampleContext<'_>, epoch: usize) -> Result<(f64, Vec<f64>)> {
        let spec = self.table.spec();
        match self.kind {
            SynthesizerKind::Ideal => {
                let alpha = ctx.alpha.ok_or_else(|| {
                    Error::InvalidConfig("the ideal synthesizer needs ground-truth symbols".into())
                })?;
                synthesize_ideal(ctx.logits, alpha, spec)
            }
            SynthesizerKind::Multiple => synthesize_multiple(ctx.logits, ctx.label, &self.table),
            SynthesizerKind::Closest => {
                let ps = self.cache.get(ctx.label)?;
                let k = closest_index(ps, ctx.logits, spec)?;
                self.state.record(ctx.index, epoch, k, &ps.choices()[k]);
                cross_entropy_to_choice(ctx.logits, &ps.choices()[k], spec)
            }
            SynthesizerKind::Random { schedule } => {
                let (loss, grad, _) = synthesize_random(
                    ctx.logits,
                    ctx.label,
                    &self.cache,
                    spec,
                    &mut self.state,
                    ctx.index,
                    epoch,
                    &schedule,
                )?;
                Ok((loss, grad))
            }
        }
    }

    /// Pseudolabel stability for Closest/Random; `None` for the others.
    pub fn pseudolabel_stability(&self) -> Option<f64> {
        if self.kind.uses_pseudolabels() {
            self.state.stability()
        } else {
            None
        }
    }
}
