mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use symcor::datalog::{Bitstring, GroundAtom, Program};

use common::{immediate_consequences, naive_fixpoint, random_program};

fn input_facts(p: &Program, bits: &Bitstring) -> Vec<GroundAtom> {
    bits.ones().map(|i| p.input_enum()[i].clone()).collect()
}

fn bits_for(p: &Program, raw: &[bool]) -> Bitstring {
    Bitstring::from_bits(raw.iter().copied().cycle().take(p.input_len()).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn engine_agrees_with_naive_oracle(seed in any::<u64>(), raw in prop::collection::vec(any::<bool>(), 12)) {
        let p = random_program(&mut ChaCha8Rng::seed_from_u64(seed));
        let bits = bits_for(&p, &raw);
        let engine: BTreeSet<GroundAtom> = p.derive_all(&bits).unwrap().into_iter().collect();
        let oracle = naive_fixpoint(&p, input_facts(&p, &bits));
        prop_assert_eq!(&engine, &oracle);
        let out = p.evaluate(&bits).unwrap();
        for (i, atom) in p.output_enum().iter().enumerate() {
            prop_assert_eq!(out.get(i), oracle.contains(atom));
        }
    }

    #[test]
    fn evaluation_is_monotone(seed in any::<u64>(), raw in prop::collection::vec(any::<bool>(), 12), extra in prop::collection::vec(any::<bool>(), 12)) {
        let p = random_program(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = bits_for(&p, &raw);
        let mut b = a.clone();
        for (i, &x) in extra.iter().cycle().take(p.input_len()).enumerate() {
            if x {
                b.set(i, true);
            }
        }
        prop_assert!(a.is_subset(&b));
        prop_assert!(p.evaluate(&a).unwrap().is_subset(&p.evaluate(&b).unwrap()));
    }

    #[test]
    fn fixed_point_is_idempotent(seed in any::<u64>(), raw in prop::collection::vec(any::<bool>(), 12)) {
        let p = random_program(&mut ChaCha8Rng::seed_from_u64(seed));
        let db = p.derive_all(&bits_for(&p, &raw)).unwrap();
        prop_assert_eq!(p.saturate(&db), db.clone());
        let set: BTreeSet<GroundAtom> = db.into_iter().collect();
        prop_assert!(immediate_consequences(&p, &set).is_subset(&set));
    }

    #[test]
    fn permuting_inputs_with_bits_preserves_outputs(seed in any::<u64>(), raw in prop::collection::vec(any::<bool>(), 12), perm_seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let p = random_program(&mut ChaCha8Rng::seed_from_u64(seed));
        let bits = bits_for(&p, &raw);
        let mut order: Vec<usize> = (0..p.input_len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(perm_seed));
        let q = p.with_permuted_inputs(&order).unwrap();
        let permuted = Bitstring::from_bits(order.iter().map(|&i| bits.get(i)).collect());
        prop_assert_eq!(q.evaluate(&permuted).unwrap(), p.evaluate(&bits).unwrap());
    }
}

#[test]
fn generated_programs_exercise_recursion_and_arithmetic() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let texts: Vec<String> = (0..100).map(|_| common::random_program_source(&mut rng)).collect();
    assert!(texts.iter().any(|t| t.contains(" + ")));
    assert!(texts.iter().any(|t| t.contains(" - ")));
    assert!(texts.iter().any(|t| t.lines().any(|l| l.starts_with("r(") && l.contains("<- r("))));
}
