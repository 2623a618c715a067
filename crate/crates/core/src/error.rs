use thiserror::Error;

use crate::datalog::DatalogError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Datalog(#[from] DatalogError),

    #[error("{what}: expected length {expected}, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid group specification: {0}")]
    InvalidGroups(String),
    #[error("probabilities of group {group} sum to {sum}, expected 1")]
    NotNormalized { group: usize, sum: f64 },
    #[error("{count} joint assignments exceeds the enumeration limit {limit}")]
    AssignmentGuard { count: u128, limit: usize },
    #[error("label {label} is out of range for {outputs} output facts")]
    LabelOutOfRange { label: usize, outputs: usize },
    #[error("no group-consistent input maps to output {label}")]
    EmptyPreimage { label: usize },
    #[error("bitstring is not a member of the preimage of output {label}")]
    NotInPreimage { label: usize },
    #[error("symbol bitstring is not one-hot per group")]
    MalformedSymbol,

    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite gradient; update skipped")]
    NonFiniteGradient,
    #[error("gradient cache does not match this network")]
    StaleCache,
    #[error("non-finite loss at epoch {epoch}, sample {sample}")]
    NonFiniteLoss { epoch: usize, sample: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("need {needed} digits, only {available} available")]
    InsufficientDigits { needed: usize, available: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
