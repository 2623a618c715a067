use std::fmt;

/// Index of a relation within a [`Program`](super::Program)'s relation table.
pub type RelId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelationKind {
    /// Declared with `input`; facts come only from the input enumeration.
    Input,
    /// Declared with `output`; derived by rules and reported through the output enumeration.
    Output,
    /// Undeclared intermediate relation appearing in some rule head.
    Derived,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub name: String,
    pub arity: usize,
    pub kind: RelationKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    /// Saturating at zero.
    Sub,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Const(u32),
    Var(String),
    Arith(ArithOp, Box<Term>, Box<Term>),
}

impl Term {
    pub fn is_ground(&self) -> bool {
        match self {
            Term::Const(_) => true,
            Term::Var(_) => false,
            Term::Arith(_, a, b) => a.is_ground() && b.is_ground(),
        }
    }

    pub fn vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Term::Const(_) => {}
            Term::Var(v) => out.push(v),
            Term::Arith(_, a, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }

    pub(crate) fn contains_arith(&self) -> bool {
        matches!(self, Term::Arith(..))
    }

    pub(crate) fn max_const(&self) -> u32 {
        match self {
            Term::Const(c) => *c,
            Term::Var(_) => 0,
            Term::Arith(_, a, b) => a.max_const().max(b.max_const()),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) => write!(f, "{c}"),
            Term::Var(v) => f.write_str(v),
            Term::Arith(op, a, b) => {
                let sym = match op {
                    ArithOp::Add => "+",
                    ArithOp::Sub => "-",
                };
                // Parenthesize nested right operands so the text re-parses identically.
                match **b {
                    Term::Arith(..) => write!(f, "{a}{sym}({b})"),
                    _ => write!(f, "{a}{sym}{b}"),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub relation: RelId,
    pub terms: Vec<Term>,
}

/// Horn clause `head <- body_1, ..., body_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<Atom>,
}

/// A relation applied to constants.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundAtom {
    pub relation: RelId,
    pub args: Vec<u32>,
}
