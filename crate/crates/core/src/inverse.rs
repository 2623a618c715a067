//! Preimages of output labels and the queries synthesizers run over them.
//!
//! A [`PreimageSet`] holds every group-consistent input bitstring the program
//! maps to a given output fact, in canonical assignment order. Preimages are
//! enumerated exhaustively from an [`AssignmentTable`], which is exact for
//! categorical groups within the enumeration limit.

use std::sync::Arc;

use rand::Rng;

use crate::datalog::{Bitstring, Program};
use crate::error::{Error, Result};
use crate::grounding::{log_softmax, GroupSpec};
use crate::semiring::AssignmentTable;

#[derive(Debug, Clone, PartialEq)]
pub struct PreimageSet {
    label: usize,
    program_digest: [u8; 32],
    choices: Vec<Vec<usize>>,
    candidates: Vec<Bitstring>,
}

impl PreimageSet {
    pub fn from_table(table: &AssignmentTable, label: usize) -> Result<PreimageSet> {
        if label >= table.output_len() {
            return Err(Error::LabelOutOfRange {
                label,
                outputs: table.output_len(),
            });
        }
        let mut choices = Vec::new();
        let mut candidates = Vec::new();
        for a in 0..table.len() {
            if table.outputs(a).contains(&label) {
                choices.push(table.choice(a).to_vec());
                candidates.push(table.bitstring(a));
            }
        }
        if candidates.is_empty() {
            return Err(Error::EmptyPreimage { label });
        }
        Ok(PreimageSet {
            label,
            program_digest: table.program_digest(),
            choices,
            candidates,
        })
    }

    pub fn label(&self) -> usize {
        self.label
    }

    pub fn program_digest(&self) -> [u8; 32] {
        self.program_digest
    }

    pub fn candidates(&self) -> &[Bitstring] {
        &self.candidates
    }

    /// Per-group member positions of each candidate.
    pub fn choices(&self) -> &[Vec<usize>] {
        &self.choices
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn position(&self, bits: &Bitstring) -> Option<usize> {
        self.candidates.iter().position(|c| c == bits)
    }

    pub fn contains(&self, bits: &Bitstring) -> bool {
        self.position(bits).is_some()
    }
}

/// All group-consistent inputs that `program` maps to output `label`.
pub fn enumerate_preimage(program: &Program, label: usize, spec: &GroupSpec) -> Result<PreimageSet> {
    let table = AssignmentTable::build(program, spec)?;
    PreimageSet::from_table(&table, label)
}

/// The sole candidate of a singleton preimage: the symbol is then determined
/// by the label alone.
pub fn forced_symbol(ps: &PreimageSet) -> Option<Bitstring> {
    match ps.candidates() {
        [only] => Some(only.clone()),
        _ => None,
    }
}

/// Cross-entropy of a per-group choice against `softmax(logits)`, given the
/// per-group log-probabilities.
pub fn choice_loss(log_probs: &[f64], choice: &[usize], spec: &GroupSpec) -> f64 {
    -spec
        .groups()
        .iter()
        .zip(choice)
        .map(|(members, &c)| log_probs[members[c]])
        .sum::<f64>()
}

/// Index of the highest-scoring candidate, where the score is the joint
/// log-probability `Σ_groups log-softmax(logits) · w`. Ties keep the earliest.
pub fn closest_index(ps: &PreimageSet, logits: &[f64], spec: &GroupSpec) -> Result<usize> {
    if ps.is_empty() {
        return Err(Error::EmptyPreimage { label: ps.label });
    }
    let log_probs = log_softmax(logits, spec)?;
    let mut best = 0;
    let mut best_loss = f64::INFINITY;
    for (k, choice) in ps.choices.iter().enumerate() {
        let loss = choice_loss(&log_probs, choice, spec);
        if loss < best_loss {
            best = k;
            best_loss = loss;
        }
    }
    Ok(best)
}

pub fn closest_candidate(ps: &PreimageSet, logits: &[f64], spec: &GroupSpec) -> Result<Bitstring> {
    Ok(ps.candidates[closest_index(ps, logits, spec)?].clone())
}

/// Epoch-indexed probability of accepting a proposal that does not lower the
/// loss: `1` for the first `warm_epochs` epochs, then `gamma^(t - warm_epochs + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AnnealSchedule {
    pub warm_epochs: usize,
    pub gamma: f64,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        AnnealSchedule {
            warm_epochs: 10,
            gamma: 0.5,
        }
    }
}

impl AnnealSchedule {
    /// Pure hill climbing: ε ≡ 0.
    pub fn greedy() -> Self {
        AnnealSchedule {
            warm_epochs: 0,
            gamma: 0.0,
        }
    }

    pub fn epsilon(&self, epoch: usize) -> f64 {
        if epoch < self.warm_epochs {
            1.0
        } else {
            self.gamma.powi((epoch - self.warm_epochs + 1) as i32)
        }
    }
}

/// Proposal for one walk step: resample one uniformly chosen group to a
/// uniform value, then project onto the preimage by taking the candidate
/// (other than the current one) that disagrees with the perturbed assignment
/// in the fewest groups, ties drawn uniformly. Returns `current` only for a
/// singleton preimage.
pub fn propose<R: Rng + ?Sized>(ps: &PreimageSet, current: usize, spec: &GroupSpec, rng: &mut R) -> usize {
    if ps.len() == 1 {
        return current;
    }
    let g = rng.random_range(0..spec.group_count());
    let v = rng.random_range(0..spec.width(g));
    let mut perturbed = ps.choices[current].clone();
    perturbed[g] = v;

    let mut best = usize::MAX;
    let mut ties: Vec<usize> = Vec::new();
    for (k, choice) in ps.choices.iter().enumerate() {
        if k == current {
            continue;
        }
        let d = choice.iter().zip(&perturbed).filter(|(a, b)| a != b).count();
        if d < best {
            best = d;
            ties.clear();
        }
        if d == best {
            ties.push(k);
        }
    }
    ties[rng.random_range(0..ties.len())]
}

/// One annealed random-walk step over candidate indices.
pub fn walk_step_index<R: Rng + ?Sized>(
    ps: &PreimageSet,
    current: usize,
    log_probs: &[f64],
    epsilon: f64,
    spec: &GroupSpec,
    rng: &mut R,
) -> usize {
    let proposal = propose(ps, current, spec, rng);
    let cur_loss = choice_loss(log_probs, &ps.choices[current], spec);
    let new_loss = choice_loss(log_probs, &ps.choices[proposal], spec);
    let u: f64 = rng.random();
    if new_loss < cur_loss || u < epsilon {
        proposal
    } else {
        current
    }
}

/// Moves `current` to a proposed candidate if the proposal's cross-entropy
/// against the predictions is lower, or otherwise with probability ε(epoch).
pub fn random_walk_step<R: Rng + ?Sized>(
    ps: &PreimageSet,
    current: &Bitstring,
    logits: &[f64],
    epoch: usize,
    schedule: &AnnealSchedule,
    spec: &GroupSpec,
    rng: &mut R,
) -> Result<Bitstring> {
    let idx = ps.position(current).ok_or(Error::NotInPreimage { label: ps.label })?;
    let log_probs = log_softmax(logits, spec)?;
    let next = walk_step_index(ps, idx, &log_probs, schedule.epsilon(epoch), spec, rng);
    Ok(ps.candidates[next].clone())
}

/// Eagerly enumerated preimages for every output label of one program.
/// Labels with an empty preimage are remembered as such.
#[derive(Debug, Clone)]
pub struct PreimageCache {
    program_digest: [u8; 32],
    sets: Vec<Option<Arc<PreimageSet>>>,
}

impl PreimageCache {
    pub fn build(table: &AssignmentTable) -> PreimageCache {
        let sets = (0..table.output_len())
            .map(|label| PreimageSet::from_table(table, label).ok().map(Arc::new))
            .collect();
        PreimageCache {
            program_digest: table.program_digest(),
            sets,
        }
    }

    pub fn program_digest(&self) -> [u8; 32] {
        self.program_digest
    }

    pub fn get(&self, label: usize) -> Result<&Arc<PreimageSet>> {
        match self.sets.get(label) {
            None => Err(Error::LabelOutOfRange {
                label,
                outputs: self.sets.len(),
            }),
            Some(None) => Err(Error::EmptyPreimage { label }),
            Some(Some(ps)) => Ok(ps),
        }
    }

    pub fn total_candidates(&self) -> usize {
        self.sets.iter().flatten().map(|s| s.len()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::addition_program;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (GroupSpec, PreimageCache) {
        let p = addition_program();
        let spec = GroupSpec::by_input_relation(&p);
        let table = AssignmentTable::build(&p, &spec).unwrap();
        (spec, PreimageCache::build(&table))
    }

    fn pair(spec: &GroupSpec, a: usize, b: usize) -> Bitstring {
        spec.bitstring_of(&[a, b])
    }

    #[test]
    fn sum_zero_and_one_preimages() {
        let (spec, cache) = setup();
        assert_eq!(cache.get(0).unwrap().candidates(), &[pair(&spec, 0, 0)]);
        assert_eq!(
            cache.get(1).unwrap().candidates(),
            &[pair(&spec, 0, 1), pair(&spec, 1, 0)]
        );
    }

    #[test]
    fn preimage_sizes_follow_the_triangle_law() {
        let (_, cache) = setup();
        for s in 0..19usize {
            // Brute force over all digit pairs.
            let brute = (0..10)
                .flat_map(|a| (0..10).map(move |b| a + b))
                .filter(|&t| t == s)
                .count();
            assert_eq!(cache.get(s).unwrap().len(), brute);
            assert_eq!(brute, if s <= 9 { s + 1 } else { 19 - s });
        }
        assert_eq!(cache.total_candidates(), 100);
    }

    #[test]
    fn forced_symbols() {
        let (spec, cache) = setup();
        assert_eq!(forced_symbol(cache.get(18).unwrap()), Some(pair(&spec, 9, 9)));
        assert_eq!(forced_symbol(cache.get(1).unwrap()), None);

        let id = Program::parse(
            "input b/1. output o/1. enum input: b(0..1); enum output: o(0..1); o(x) <- b(x).",
        )
        .unwrap();
        let id_spec = GroupSpec::by_input_relation(&id);
        let ps = enumerate_preimage(&id, 0, &id_spec).unwrap();
        assert_eq!(forced_symbol(&ps), Some(Bitstring::with_ones(2, &[0])));
    }

    #[test]
    fn unreachable_label_is_an_error() {
        let p = Program::parse(
            "input b/1. output o/1. enum input: b(0..1); enum output: o(0..2); o(x) <- b(x).",
        )
        .unwrap();
        let spec = GroupSpec::by_input_relation(&p);
        assert!(matches!(
            enumerate_preimage(&p, 2, &spec),
            Err(Error::EmptyPreimage { label: 2 })
        ));
        assert!(matches!(
            enumerate_preimage(&p, 5, &spec),
            Err(Error::LabelOutOfRange { .. })
        ));
    }

    #[test]
    fn closest_follows_confident_predictions() {
        let (spec, cache) = setup();
        let mut z = vec![0.0; 20];
        z[4] = 6.0;
        z[15] = 6.0;
        let ps = cache.get(9).unwrap();
        assert_eq!(closest_candidate(ps, &z, &spec).unwrap(), pair(&spec, 4, 5));
        // Brute-force scoring oracle over all candidates.
        let lp = log_softmax(&z, &spec).unwrap();
        let scores: Vec<f64> = ps
            .choices()
            .iter()
            .map(|c| lp[c[0]] + lp[10 + c[1]])
            .collect();
        let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(scores.iter().position(|&s| s == best), Some(4));
    }

    #[test]
    fn closest_on_singleton_and_ties() {
        let (spec, cache) = setup();
        let z: Vec<f64> = (0..20).map(|i| i as f64).collect();
        assert_eq!(closest_candidate(cache.get(0).unwrap(), &z, &spec).unwrap(), pair(&spec, 0, 0));
        assert_eq!(
            closest_candidate(cache.get(1).unwrap(), &[0.0; 20], &spec).unwrap(),
            pair(&spec, 0, 1)
        );
    }

    #[test]
    fn schedule_shape() {
        let s = AnnealSchedule::default();
        for t in 0..10 {
            assert_eq!(s.epsilon(t), 1.0);
        }
        assert_eq!(s.epsilon(10), 0.5);
        assert_eq!(s.epsilon(11), 0.25);
        assert_eq!(AnnealSchedule::greedy().epsilon(0), 0.0);
    }

    #[test]
    fn warm_epochs_adopt_worse_proposals() {
        let (spec, cache) = setup();
        let ps = cache.get(9).unwrap();
        // Predictions sharply favour (4,5); every other candidate is worse.
        let mut z = vec![0.0; 20];
        z[4] = 20.0;
        z[15] = 20.0;
        let current = pair(&spec, 4, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let next =
                random_walk_step(ps, &current, &z, 3, &AnnealSchedule::default(), &spec, &mut rng)
                    .unwrap();
            assert_ne!(next, current);
            assert!(ps.contains(&next));
        }
    }

    #[test]
    fn better_proposals_are_always_adopted() {
        let (spec, cache) = setup();
        let ps = cache.get(1).unwrap();
        let mut z = vec![0.0; 20];
        z[1] = 5.0;
        z[10] = 5.0;
        // From <0,1> the only other candidate is <1,0>, which has lower loss.
        let current = pair(&spec, 0, 1);
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let next = random_walk_step(ps, &current, &z, 14, &AnnealSchedule::greedy(), &spec, &mut rng)
                .unwrap();
            assert_eq!(next, pair(&spec, 1, 0));
        }
    }

    #[test]
    fn walk_is_seed_deterministic() {
        let (spec, cache) = setup();
        let ps = cache.get(9).unwrap();
        let z: Vec<f64> = (0..20).map(|i| ((i * 37) % 13) as f64 * 0.1).collect();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut cur = ps.candidates()[0].clone();
            let mut trace = Vec::new();
            for epoch in 0..30 {
                cur = random_walk_step(ps, &cur, &z, epoch, &AnnealSchedule::default(), &spec, &mut rng)
                    .unwrap();
                trace.push(cur.clone());
            }
            trace
        };
        assert_eq!(run(11), run(11));
    }

    #[test]
    fn walk_rejects_foreign_state() {
        let (spec, cache) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = random_walk_step(
            cache.get(9).unwrap(),
            &pair(&spec, 0, 0),
            &[0.0; 20],
            0,
            &AnnealSchedule::default(),
            &spec,
            &mut rng,
        );
        assert!(matches!(err, Err(Error::NotInPreimage { label: 9 })));
    }
}
