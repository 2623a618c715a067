//! Semi-naive bottom-up evaluation.
//!
//! Each round joins every rule once per body position, reading that position
//! from the facts that were new in the previous round and the remaining
//! positions from the full database. A round that produces nothing new is the
//! least fixed point.

use std::collections::{HashMap, HashSet};

use super::ast::{ArithOp, GroundAtom, RelId, Relation, Rule, Term};

#[derive(Debug, Clone)]
enum CTerm {
    Const(u32),
    Var(usize),
    Arith(ArithOp, Box<CTerm>, Box<CTerm>),
}

impl CTerm {
    fn compile(t: &Term, vars: &mut HashMap<String, usize>) -> CTerm {
        match t {
            Term::Const(c) => CTerm::Const(*c),
            Term::Var(v) => {
                let next = vars.len();
                CTerm::Var(*vars.entry(v.clone()).or_insert(next))
            }
            Term::Arith(op, a, b) => CTerm::Arith(
                *op,
                Box::new(CTerm::compile(a, vars)),
                Box::new(CTerm::compile(b, vars)),
            ),
        }
    }

    /// Value under a complete binding; `None` on overflow.
    fn value(&self, binding: &[Option<u32>]) -> Option<u32> {
        match self {
            CTerm::Const(c) => Some(*c),
            CTerm::Var(v) => binding[*v],
            CTerm::Arith(ArithOp::Add, a, b) => a.value(binding)?.checked_add(b.value(binding)?),
            CTerm::Arith(ArithOp::Sub, a, b) => {
                Some(a.value(binding)?.saturating_sub(b.value(binding)?))
            }
        }
    }
}

#[derive(Debug, Clone)]
struct CRule {
    head_rel: RelId,
    head: Vec<CTerm>,
    body: Vec<(RelId, Vec<CTerm>)>,
    nvars: usize,
}

/// Compiled rule set, shared by every evaluation of a program.
#[derive(Debug, Clone)]
pub(crate) struct Engine {
    rules: Vec<CRule>,
    nrels: usize,
    bound: u32,
}

pub(crate) struct Database {
    rels: Vec<HashSet<Vec<u32>>>,
}

impl Database {
    pub fn contains(&self, atom: &GroundAtom) -> bool {
        self.rels[atom.relation].contains(&atom.args)
    }

    pub fn into_sorted(self) -> Vec<GroundAtom> {
        let mut out: Vec<GroundAtom> = self
            .rels
            .into_iter()
            .enumerate()
            .flat_map(|(relation, set)| {
                set.into_iter().map(move |args| GroundAtom { relation, args })
            })
            .collect();
        out.sort();
        out
    }
}

impl Engine {
    pub fn new(relations: &[Relation], rules: &[Rule], bound: u32) -> Engine {
        let rules = rules
            .iter()
            .map(|r| {
                let mut vars = HashMap::new();
                // Body first so that body variables get the low indices.
                let body = r
                    .body
                    .iter()
                    .map(|a| {
                        let ts = a.terms.iter().map(|t| CTerm::compile(t, &mut vars));
                        (a.relation, ts.collect())
                    })
                    .collect();
                let head = r
                    .head
                    .terms
                    .iter()
                    .map(|t| CTerm::compile(t, &mut vars))
                    .collect();
                CRule {
                    head_rel: r.head.relation,
                    head,
                    body,
                    nvars: vars.len(),
                }
            })
            .collect();
        Engine {
            rules,
            nrels: relations.len(),
            bound,
        }
    }

    pub fn run<'a>(&self, facts: impl IntoIterator<Item = &'a GroundAtom>) -> Database {
        let mut full = vec![HashSet::new(); self.nrels];
        let mut delta = vec![HashSet::new(); self.nrels];
        for f in facts {
            full[f.relation].insert(f.args.clone());
            delta[f.relation].insert(f.args.clone());
        }
        loop {
            let mut fresh: Vec<HashSet<Vec<u32>>> = vec![HashSet::new(); self.nrels];
            let mut any = false;
            for rule in &self.rules {
                for pivot in 0..rule.body.len() {
                    if delta[rule.body[pivot].0].is_empty() {
                        continue;
                    }
                    let mut binding = vec![None; rule.nvars];
                    self.join(rule, pivot, 0, &full, &delta, &mut binding, &mut |t| {
                        if !full[rule.head_rel].contains(&t) {
                            fresh[rule.head_rel].insert(t);
                        }
                    });
                }
            }
            for (rel, set) in fresh.iter().enumerate() {
                if !set.is_empty() {
                    any = true;
                    full[rel].extend(set.iter().cloned());
                }
            }
            if !any {
                break;
            }
            delta = fresh;
        }
        Database { rels: full }
    }

    #[allow(clippy::too_many_arguments)]
    fn join(
        &self,
        rule: &CRule,
        pivot: usize,
        pos: usize,
        full: &[HashSet<Vec<u32>>],
        delta: &[HashSet<Vec<u32>>],
        binding: &mut Vec<Option<u32>>,
        emit: &mut dyn FnMut(Vec<u32>),
    ) {
        if pos == rule.body.len() {
            let mut tuple = Vec::with_capacity(rule.head.len());
            for t in &rule.head {
                match t.value(binding) {
                    Some(v) if v <= self.bound => tuple.push(v),
                    _ => return,
                }
            }
            emit(tuple);
            return;
        }
        let (rel, terms) = &rule.body[pos];
        let source = if pos == pivot { &delta[*rel] } else { &full[*rel] };
        let mut newly = Vec::with_capacity(terms.len());
        for tuple in source {
            newly.clear();
            let mut ok = true;
            for (t, &v) in terms.iter().zip(tuple) {
                match t {
                    CTerm::Const(c) => ok = *c == v,
                    CTerm::Var(i) => match binding[*i] {
                        Some(b) => ok = b == v,
                        None => {
                            binding[*i] = Some(v);
                            newly.push(*i);
                        }
                    },
                    CTerm::Arith(..) => unreachable!("arithmetic is rejected in rule bodies"),
                }
                if !ok {
                    break;
                }
            }
            if ok {
                let saved = std::mem::take(&mut newly);
                self.join(rule, pivot, pos + 1, full, delta, binding, emit);
                newly = saved;
            }
            for &i in &newly {
                binding[i] = None;
            }
        }
    }
}
