pub mod cli;
pub mod datalog;
pub mod error;
pub mod gradcheck;
pub mod grounding;
pub mod harness;
pub mod inverse;
pub mod nn;
pub mod semiring;
pub mod synth;

pub use error::{Error, Result};
