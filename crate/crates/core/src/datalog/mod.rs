//! Datalog symbolic layer.
//!
//! A [`Program`] maps a bitstring over its input-fact enumeration to a
//! bitstring over its output-fact enumeration by computing the least fixed
//! point of its rules. Only positive rules are supported; head terms may use
//! `+` and saturating `-`.

mod ast;
mod bitstring;
mod eval;
mod parser;
mod program;

pub use ast::{ArithOp, Atom, GroundAtom, RelId, Relation, RelationKind, Rule, Term};
pub use bitstring::Bitstring;
pub use program::{ParseOptions, Program, DEFAULT_VALUE_BOUND};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DatalogError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("line {line}: unsafe rule, head variable `{variable}` does not occur in the body")]
    UnsafeRule { line: usize, variable: String },
    #[error("line {line}: `{relation}` has arity {expected} but is used with {found} argument(s)")]
    ArityMismatch {
        line: usize,
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: input relation `{relation}` cannot appear in a rule head")]
    InputInHead { line: usize, relation: String },
    #[error("line {line}: relation `{relation}` is neither declared nor derived")]
    UnknownRelation { line: usize, relation: String },
    #[error("line {line}: relation `{relation}` declared twice")]
    DuplicateDeclaration { line: usize, relation: String },
    #[error("duplicate enumeration entry `{atom}`")]
    DuplicateEnumEntry { atom: String },
    #[error("line {line}: `{relation}` is not an {expected} relation")]
    WrongEnumRelation {
        line: usize,
        relation: String,
        expected: &'static str,
    },
    #[error("line {line}: arithmetic is only allowed in rule heads")]
    ArithmeticInBody { line: usize },
    #[error("line {line}: constant {value} exceeds the value bound {bound}")]
    ConstantOutOfRange { line: usize, value: u32, bound: u32 },
    #[error("invalid bitstring character `{0}`")]
    BadBitstring(char),
    #[error("bitstring has length {found}, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
}

/// Visual addition: two categorical digit inputs, one sum output.
pub const ADDITION_SOURCE: &str = include_str!("../../programs/addition.dl");

/// Saturating subtraction over the same input enumeration as [`ADDITION_SOURCE`].
pub const SUBTRACTION_SOURCE: &str = include_str!("../../programs/subtraction.dl");

/// Exclusive-or of two bits, each encoded one-hot.
pub const XOR_SOURCE: &str = include_str!("../../programs/xor.dl");

pub fn addition_program() -> Program {
    Program::parse(ADDITION_SOURCE).expect("bundled addition program parses")
}

pub fn subtraction_program() -> Program {
    Program::parse(SUBTRACTION_SOURCE).expect("bundled subtraction program parses")
}

pub fn xor_program() -> Program {
    Program::parse(XOR_SOURCE).expect("bundled xor program parses")
}
