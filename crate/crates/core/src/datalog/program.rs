use std::collections::{HashMap, HashSet};
use std::fmt;

use sha2::{Digest, Sha256};

use super::ast::{Atom, GroundAtom, RelId, Relation, RelationKind, Rule, Term};
use super::bitstring::Bitstring;
use super::eval::Engine;
use super::parser::{parse_items, DeclKind, Item, RawAtom, RawTerm};
use super::DatalogError;

/// Largest natural the engine will materialize unless configured otherwise.
pub const DEFAULT_VALUE_BOUND: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParseOptions {
    /// Derived facts carrying a value above this bound are discarded.
    pub value_bound: u32,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            value_bound: DEFAULT_VALUE_BOUND,
        }
    }
}

/// A validated Datalog program together with its input and output fact
/// enumerations. Immutable once built.
#[derive(Debug, Clone)]
pub struct Program {
    relations: Vec<Relation>,
    rules: Vec<Rule>,
    input_enum: Vec<GroundAtom>,
    output_enum: Vec<GroundAtom>,
    output_index: HashMap<GroundAtom, usize>,
    value_bound: u32,
    engine: Engine,
    digest: [u8; 32],
}

impl Program {
    pub fn parse(source: &str) -> Result<Program, DatalogError> {
        Self::parse_with(source, ParseOptions::default())
    }

    pub fn parse_with(source: &str, options: ParseOptions) -> Result<Program, DatalogError> {
        let items = parse_items(source)?;
        Builder::new(options).build(items)
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn relation(&self, id: RelId) -> &Relation {
        &self.relations[id]
    }

    pub fn relation_id(&self, name: &str) -> Option<RelId> {
        self.relations.iter().position(|r| r.name == name)
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn input_enum(&self) -> &[GroundAtom] {
        &self.input_enum
    }

    pub fn output_enum(&self) -> &[GroundAtom] {
        &self.output_enum
    }

    /// Number of input facts, `n`.
    pub fn input_len(&self) -> usize {
        self.input_enum.len()
    }

    /// Number of output facts, `q`.
    pub fn output_len(&self) -> usize {
        self.output_enum.len()
    }

    pub fn value_bound(&self) -> u32 {
        self.value_bound
    }

    /// SHA-256 over the canonical program text; identifies the program in caches.
    pub fn digest(&self) -> [u8; 32] {
        self.digest
    }

    pub fn output_position(&self, atom: &GroundAtom) -> Option<usize> {
        self.output_index.get(atom).copied()
    }

    /// Looks up an output fact written as text, e.g. `sum(8)`.
    pub fn output_position_by_text(&self, text: &str) -> Option<usize> {
        let wanted = text.split_whitespace().collect::<String>();
        self.output_enum
            .iter()
            .position(|a| self.atom_text(a) == wanted)
    }

    pub fn atom_text(&self, atom: &GroundAtom) -> String {
        let rel = &self.relations[atom.relation];
        if atom.args.is_empty() {
            rel.name.clone()
        } else {
            let args: Vec<String> = atom.args.iter().map(|a| a.to_string()).collect();
            format!("{}({})", rel.name, args.join(","))
        }
    }

    /// Least fixed point of the rules over the enabled input facts, projected
    /// onto the output enumeration.
    pub fn evaluate(&self, input: &Bitstring) -> Result<Bitstring, DatalogError> {
        if input.len() != self.input_len() {
            return Err(DatalogError::LengthMismatch {
                expected: self.input_len(),
                found: input.len(),
            });
        }
        let facts = input.ones().map(|i| &self.input_enum[i]);
        let db = self.engine.run(facts);
        let mut out = Bitstring::zeros(self.output_len());
        for (j, atom) in self.output_enum.iter().enumerate() {
            if db.contains(atom) {
                out.set(j, true);
            }
        }
        Ok(out)
    }

    /// Full derived database (input facts plus everything derived), sorted.
    /// Includes derived facts outside the output enumeration.
    pub fn derive_all(&self, input: &Bitstring) -> Result<Vec<GroundAtom>, DatalogError> {
        if input.len() != self.input_len() {
            return Err(DatalogError::LengthMismatch {
                expected: self.input_len(),
                found: input.len(),
            });
        }
        let db = self.engine.run(input.ones().map(|i| &self.input_enum[i]));
        Ok(db.into_sorted())
    }

    /// Fixed point of the rules over arbitrary starting facts, sorted.
    pub fn saturate<'a>(&self, facts: impl IntoIterator<Item = &'a GroundAtom>) -> Vec<GroundAtom> {
        self.engine.run(facts).into_sorted()
    }

    /// Same program with the input enumeration reordered: new position `k`
    /// holds the old entry `order[k]`.
    pub fn with_permuted_inputs(&self, order: &[usize]) -> Result<Program, DatalogError> {
        let mut seen = vec![false; self.input_len()];
        if order.len() != self.input_len() || order.iter().any(|&i| i >= seen.len()) {
            return Err(DatalogError::LengthMismatch {
                expected: self.input_len(),
                found: order.len(),
            });
        }
        for &i in order {
            if std::mem::replace(&mut seen[i], true) {
                let atom = self.atom_text(&self.input_enum[i]);
                return Err(DatalogError::DuplicateEnumEntry { atom });
            }
        }
        let mut p = self.clone();
        p.input_enum = order.iter().map(|&i| self.input_enum[i].clone()).collect();
        p.digest = digest_of(&p.to_string());
        Ok(p)
    }

    fn write_atom(&self, f: &mut fmt::Formatter<'_>, atom: &Atom) -> fmt::Result {
        let rel = &self.relations[atom.relation];
        f.write_str(&rel.name)?;
        if !atom.terms.is_empty() {
            let terms: Vec<String> = atom.terms.iter().map(|t| t.to_string()).collect();
            write!(f, "({})", terms.join(","))?;
        }
        Ok(())
    }
}

/// Canonical text form; parsing it yields an equivalent program.
impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for rel in &self.relations {
            match rel.kind {
                RelationKind::Input => writeln!(f, "input {}/{}.", rel.name, rel.arity)?,
                RelationKind::Output => writeln!(f, "output {}/{}.", rel.name, rel.arity)?,
                RelationKind::Derived => {}
            }
        }
        for (label, list) in [("input", &self.input_enum), ("output", &self.output_enum)] {
            if list.is_empty() {
                continue;
            }
            let atoms: Vec<String> = list.iter().map(|a| self.atom_text(a)).collect();
            writeln!(f, "enum {label}: {};", atoms.join(", "))?;
        }
        for rule in &self.rules {
            self.write_atom(f, &rule.head)?;
            f.write_str(" <- ")?;
            for (i, atom) in rule.body.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                self.write_atom(f, atom)?;
            }
            writeln!(f, ".")?;
        }
        Ok(())
    }
}

fn digest_of(text: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(text.as_bytes());
    h.finalize().into()
}

struct Builder {
    options: ParseOptions,
    relations: Vec<Relation>,
    by_name: HashMap<String, RelId>,
}

impl Builder {
    fn new(options: ParseOptions) -> Self {
        Builder {
            options,
            relations: Vec::new(),
            by_name: HashMap::new(),
        }
    }

    fn build(mut self, items: Vec<Item>) -> Result<Program, DatalogError> {
        for item in &items {
            if let Item::Decl {
                kind,
                name,
                arity,
                pos,
            } = item
            {
                if self.by_name.contains_key(name) {
                    return Err(DatalogError::DuplicateDeclaration {
                        line: pos.line,
                        relation: name.clone(),
                    });
                }
                let kind = match kind {
                    DeclKind::Input => RelationKind::Input,
                    DeclKind::Output => RelationKind::Output,
                };
                self.add_relation(name, *arity, kind);
            }
        }
        // Undeclared relations in rule heads are intermediate derived relations.
        for item in &items {
            if let Item::Rule { head, .. } = item {
                if !self.by_name.contains_key(&head.name) {
                    self.add_relation(&head.name, head.terms.len(), RelationKind::Derived);
                }
            }
        }

        let mut rules = Vec::new();
        let mut input_enum = Vec::new();
        let mut output_enum = Vec::new();
        for item in items {
            match item {
                Item::Decl { .. } => {}
                Item::Rule { head, body, pos } => rules.push(self.rule(head, body, pos.line)?),
                Item::Enum { kind, atoms } => {
                    let (target, want) = match kind {
                        DeclKind::Input => (&mut input_enum, RelationKind::Input),
                        DeclKind::Output => (&mut output_enum, RelationKind::Output),
                    };
                    for raw in atoms {
                        let expanded = self.enum_atoms(&raw, want)?;
                        target.extend(expanded);
                    }
                }
            }
        }

        for list in [&input_enum, &output_enum] {
            let mut seen = HashSet::new();
            for atom in list {
                if !seen.insert(atom) {
                    return Err(DatalogError::DuplicateEnumEntry {
                        atom: self.ground_text(atom),
                    });
                }
            }
        }

        let output_index = output_enum
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        let engine = Engine::new(&self.relations, &rules, self.options.value_bound);
        let mut program = Program {
            relations: self.relations,
            rules,
            input_enum,
            output_enum,
            output_index,
            value_bound: self.options.value_bound,
            engine,
            digest: [0; 32],
        };
        program.digest = digest_of(&program.to_string());
        Ok(program)
    }

    fn add_relation(&mut self, name: &str, arity: usize, kind: RelationKind) {
        self.by_name.insert(name.to_string(), self.relations.len());
        self.relations.push(Relation {
            name: name.to_string(),
            arity,
            kind,
        });
    }

    fn ground_text(&self, atom: &GroundAtom) -> String {
        let args: Vec<String> = atom.args.iter().map(|a| a.to_string()).collect();
        format!("{}({})", self.relations[atom.relation].name, args.join(","))
    }

    fn resolve(&self, raw: &RawAtom) -> Result<RelId, DatalogError> {
        let id = *self
            .by_name
            .get(&raw.name)
            .ok_or_else(|| DatalogError::UnknownRelation {
                line: raw.pos.line,
                relation: raw.name.clone(),
            })?;
        let expected = self.relations[id].arity;
        if raw.terms.len() != expected {
            return Err(DatalogError::ArityMismatch {
                line: raw.pos.line,
                relation: raw.name.clone(),
                expected,
                found: raw.terms.len(),
            });
        }
        Ok(id)
    }

    fn check_bound(&self, term: &Term, line: usize) -> Result<(), DatalogError> {
        let value = term.max_const();
        if value > self.options.value_bound {
            return Err(DatalogError::ConstantOutOfRange {
                line,
                value,
                bound: self.options.value_bound,
            });
        }
        Ok(())
    }

    fn atom(&self, raw: RawAtom, line: usize) -> Result<Atom, DatalogError> {
        let relation = self.resolve(&raw)?;
        let mut terms = Vec::with_capacity(raw.terms.len());
        for t in raw.terms {
            match t {
                RawTerm::Term(t) => {
                    self.check_bound(&t, line)?;
                    terms.push(t);
                }
                RawTerm::Range(..) => unreachable!("ranges only parse inside enumerations"),
            }
        }
        Ok(Atom { relation, terms })
    }

    fn rule(&self, head: RawAtom, body: Vec<RawAtom>, line: usize) -> Result<Rule, DatalogError> {
        let head = self.atom(head, line)?;
        if self.relations[head.relation].kind == RelationKind::Input {
            return Err(DatalogError::InputInHead {
                line,
                relation: self.relations[head.relation].name.clone(),
            });
        }
        let body = body
            .into_iter()
            .map(|a| self.atom(a, line))
            .collect::<Result<Vec<_>, _>>()?;
        if body.iter().flat_map(|a| &a.terms).any(Term::contains_arith) {
            return Err(DatalogError::ArithmeticInBody { line });
        }
        let mut bound = Vec::new();
        for atom in &body {
            for t in &atom.terms {
                t.vars(&mut bound);
            }
        }
        let mut head_vars = Vec::new();
        for t in &head.terms {
            t.vars(&mut head_vars);
        }
        if let Some(v) = head_vars.iter().find(|v| !bound.contains(v)) {
            return Err(DatalogError::UnsafeRule {
                line,
                variable: v.to_string(),
            });
        }
        Ok(Rule { head, body })
    }

    fn enum_atoms(
        &self,
        raw: &RawAtom,
        want: RelationKind,
    ) -> Result<Vec<GroundAtom>, DatalogError> {
        let relation = self.resolve(raw)?;
        if self.relations[relation].kind != want {
            return Err(DatalogError::WrongEnumRelation {
                line: raw.pos.line,
                relation: raw.name.clone(),
                expected: match want {
                    RelationKind::Input => "input",
                    _ => "output",
                },
            });
        }
        let mut combos: Vec<Vec<u32>> = vec![Vec::new()];
        for t in &raw.terms {
            let (lo, hi) = match t {
                RawTerm::Term(Term::Const(c)) => (*c, *c),
                RawTerm::Range(lo, hi) => (*lo, *hi),
                RawTerm::Term(_) => unreachable!("enumeration terms parse as constants"),
            };
            if hi > self.options.value_bound {
                return Err(DatalogError::ConstantOutOfRange {
                    line: raw.pos.line,
                    value: hi,
                    bound: self.options.value_bound,
                });
            }
            combos = combos
                .into_iter()
                .flat_map(|prefix| {
                    (lo..=hi).map(move |v| {
                        let mut next = prefix.clone();
                        next.push(v);
                        next
                    })
                })
                .collect();
        }
        Ok(combos
            .into_iter()
            .map(|args| GroundAtom { relation, args })
            .collect())
    }
}
