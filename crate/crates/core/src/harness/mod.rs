//! Datasets, the training loop, metrics, reports and experiment drivers.

pub mod config;
pub mod data;
pub mod glyphs;
pub mod metrics;
pub mod report;
pub mod train;
pub mod xor;

pub use config::{DatasetSpec, ExperimentConfig};
pub use data::{generate_synthetic_dataset, load_mnist_idx, make_pairs, Pairing, Sample};
pub use metrics::{evaluate_model, implication_audit, Evaluation};
pub use train::{run_experiment, train, train_prepared, Prepared, RunReport, TrainOutcome};
pub use xor::xor_demo;
