//! Random small programs and a naive bottom-up evaluator used as an oracle.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use symcor::datalog::{ArithOp, Atom, GroundAtom, ParseOptions, Program, Term};

pub const ORACLE_BOUND: u32 = 6;

const VARS: [&str; 3] = ["X", "Y", "Z"];

fn body_term<R: Rng>(rng: &mut R) -> String {
    if rng.random_bool(0.2) {
        rng.random_range(0..3u32).to_string()
    } else {
        VARS[rng.random_range(0..VARS.len())].to_string()
    }
}

fn head_term<R: Rng>(rng: &mut R, bound_vars: &[String]) -> String {
    let pick = |rng: &mut R| bound_vars[rng.random_range(0..bound_vars.len())].clone();
    if bound_vars.is_empty() || rng.random_bool(0.1) {
        return rng.random_range(0..4u32).to_string();
    }
    match rng.random_range(0..6) {
        0 => format!("{} + {}", pick(rng), rng.random_range(0..3u32)),
        1 => format!("{} - {}", pick(rng), pick(rng)),
        2 => format!("{} + {}", pick(rng), pick(rng)),
        _ => pick(rng),
    }
}

/// Source text of a random program over inputs `a/1` and `e/2` (values
/// 0..2), derived relations `r/1` and `s/2`, and output `o/1` (0..6).
pub fn random_program_source<R: Rng>(rng: &mut R) -> String {
    let arity: HashMap<&str, usize> = [("a", 1), ("e", 2), ("r", 1), ("s", 2), ("o", 1)].into_iter().collect();
    let mut src = String::from(
        "input a/1.\ninput e/2.\noutput o/1.\nenum input: a(0..2), e(0..2, 0..2);\nenum output: o(0..6);\n",
    );
    let heads = ["r", "s", "o"];
    let n_rules = rng.random_range(1..6);
    let mut rule_heads: Vec<&str> = (0..n_rules).map(|_| heads[rng.random_range(0..3)]).collect();
    if !rule_heads.contains(&"o") {
        rule_heads.push("o");
    }
    let mut body_rels: Vec<&str> = vec!["a", "e"];
    body_rels.extend(heads.iter().filter(|h| rule_heads.contains(h)));
    for head in rule_heads {
        let n_body = rng.random_range(1..4);
        let mut vars = Vec::new();
        let mut body = Vec::new();
        for _ in 0..n_body {
            let rel = body_rels[rng.random_range(0..body_rels.len())];
            let terms: Vec<String> = (0..arity[rel]).map(|_| body_term(rng)).collect();
            for t in &terms {
                if t.chars().all(|c| c.is_ascii_alphabetic()) && !vars.contains(t) {
                    vars.push(t.clone());
                }
            }
            body.push(format!("{rel}({})", terms.join(", ")));
        }
        let hterms: Vec<String> = (0..arity[head]).map(|_| head_term(rng, &vars)).collect();
        src.push_str(&format!("{head}({}) <- {}.\n", hterms.join(", "), body.join(", ")));
    }
    src
}

pub fn random_program<R: Rng>(rng: &mut R) -> Program {
    let src = random_program_source(rng);
    Program::parse_with(&src, ParseOptions { value_bound: ORACLE_BOUND })
        .unwrap_or_else(|e| panic!("generated program fails to parse: {e}\n{src}"))
}

fn eval_head(t: &Term, env: &HashMap<String, u64>) -> u64 {
    match t {
        Term::Const(c) => u64::from(*c),
        Term::Var(v) => env[v],
        Term::Arith(ArithOp::Add, a, b) => eval_head(a, env) + eval_head(b, env),
        Term::Arith(ArithOp::Sub, a, b) => eval_head(a, env).saturating_sub(eval_head(b, env)),
    }
}

fn matches(
    body: &[Atom],
    db: &BTreeSet<GroundAtom>,
    env: &mut HashMap<String, u64>,
    out: &mut Vec<HashMap<String, u64>>,
) {
    let Some((first, rest)) = body.split_first() else {
        out.push(env.clone());
        return;
    };
    for fact in db.iter().filter(|f| f.relation == first.relation) {
        let mut local = env.clone();
        let ok = first.terms.iter().zip(&fact.args).all(|(t, &v)| match t {
            Term::Const(c) => *c == v,
            Term::Var(x) => *local.entry(x.clone()).or_insert(u64::from(v)) == u64::from(v),
            Term::Arith(..) => unreachable!("no arithmetic in bodies"),
        });
        if ok {
            matches(rest, db, &mut local, out);
        }
    }
}

/// One naive round: every rule applied to every match in `db`.
pub fn immediate_consequences(p: &Program, db: &BTreeSet<GroundAtom>) -> BTreeSet<GroundAtom> {
    let mut new = BTreeSet::new();
    for rule in p.rules() {
        let mut envs = Vec::new();
        matches(&rule.body, db, &mut HashMap::new(), &mut envs);
        for env in envs {
            let args: Vec<u64> = rule.head.terms.iter().map(|t| eval_head(t, &env)).collect();
            if args.iter().all(|&v| v <= u64::from(p.value_bound())) {
                new.insert(GroundAtom {
                    relation: rule.head.relation,
                    args: args.into_iter().map(|v| v as u32).collect(),
                });
            }
        }
    }
    new
}

/// Least fixed point by repeated naive rounds.
pub fn naive_fixpoint(p: &Program, facts: impl IntoIterator<Item = GroundAtom>) -> BTreeSet<GroundAtom> {
    let mut db: BTreeSet<GroundAtom> = facts.into_iter().collect();
    loop {
        let before = db.len();
        let new = immediate_consequences(p, &db);
        db.extend(new);
        if db.len() == before {
            return db;
        }
    }
}
