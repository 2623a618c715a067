//! Experiment configuration, read from JSON.
//!
//! Every key is optional; omitted keys take the defaults below.
//!
//! ```json
//! {
//!   "dataset": { "source": "synthetic", "train": 2000, "test": 500, "noise": 0.05, "seed": 7 },
//!   "pairing": { "policy": "uniform" },
//!   "test_pairing": { "policy": "uniform" },
//!   "synthesizer": { "kind": "random", "schedule": { "warm_epochs": 10, "gamma": 0.5 } },
//!   "seeds": [0],
//!   "epochs": 15,
//!   "batch_size": 16,
//!   "learning_rate": 0.0001,
//!   "checkpoint": null,
//!   "network": null,
//!   "program": null,
//!   "trace_pseudolabels": false
//! }
//! ```
//!
//! An MNIST dataset names the four IDX files:
//! `{ "source": "mnist", "train_images": "...", "train_labels": "...",
//! "test_images": "...", "test_labels": "...", "train": 30000, "test": 5000, "seed": 7 }`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datalog::{addition_program, Program};
use crate::error::{Error, Result};
use crate::harness::data::{Pairing, MAX_NOISE_RATE};
use crate::nn::NetworkConfig;
use crate::synth::SynthesizerKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatasetSpec {
    Synthetic {
        #[serde(default = "default_train")]
        train: usize,
        #[serde(default = "default_test")]
        test: usize,
        #[serde(default = "default_noise")]
        noise: f64,
        #[serde(default)]
        seed: u64,
    },
    Mnist {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
        #[serde(default = "default_mnist_train")]
        train: usize,
        #[serde(default = "default_mnist_test")]
        test: usize,
        #[serde(default)]
        seed: u64,
    },
}

fn default_train() -> usize {
    2000
}
fn default_test() -> usize {
    500
}
fn default_noise() -> f64 {
    0.05
}
fn default_mnist_train() -> usize {
    30_000
}
fn default_mnist_test() -> usize {
    5000
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec::Synthetic {
            train: default_train(),
            test: default_test(),
            noise: default_noise(),
            seed: 0,
        }
    }
}

impl DatasetSpec {
    pub fn sizes(&self) -> (usize, usize) {
        match *self {
            DatasetSpec::Synthetic { train, test, .. } | DatasetSpec::Mnist { train, test, .. } => (train, test),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    /// Pairing of training samples.
    pub pairing: Pairing,
    /// Pairing of test samples.
    pub test_pairing: Pairing,
    pub synthesizer: SynthesizerKind,
    /// One run per seed; a seed fixes initialization, shuffling and the
    /// synthesizer's random stream.
    pub seeds: Vec<u64>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Initial parameters; otherwise fresh seeded initialization.
    pub checkpoint: Option<PathBuf>,
    /// Defaults to the encoder matching the dataset's image size.
    pub network: Option<NetworkConfig>,
    /// Datalog source; defaults to digit addition.
    pub program: Option<PathBuf>,
    /// Dump every pseudolabel assignment to `trace_<seed>.csv`.
    pub trace_pseudolabels: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetSpec::default(),
            pairing: Pairing::Uniform,
            test_pairing: Pairing::Uniform,
            synthesizer: SynthesizerKind::random(),
            seeds: vec![0],
            epochs: 15,
            batch_size: 16,
            learning_rate: 1e-4,
            checkpoint: None,
            network: None,
            program: None,
            trace_pseudolabels: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
        let path = path.as_ref();
        let mut cfg = Self::from_json(&std::fs::read_to_string(path)?)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new("")));
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let (train, test) = self.dataset.sizes();
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if train == 0 || test == 0 {
            return bad("train and test sizes must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required");
        }
        if let DatasetSpec::Synthetic { noise, .. } = self.dataset {
            if !(0.0..=MAX_NOISE_RATE).contains(&noise) {
                return bad("noise rate outside [0, 0.3]");
            }
        }
        for p in [self.pairing, self.test_pairing] {
            if let Pairing::SameDigit { replacement } = p {
                if !(0.0..=1.0).contains(&replacement) {
                    return bad("replacement fraction outside [0, 1]");
                }
            }
        }
        self.network_config().validate()
    }

    pub fn network_config(&self) -> NetworkConfig {
        match (&self.network, &self.dataset) {
            (Some(n), _) => n.clone(),
            (None, DatasetSpec::Mnist { .. }) => NetworkConfig::mnist(),
            (None, DatasetSpec::Synthetic { .. }) => NetworkConfig::default(),
        }
    }

    /// Rebases every relative file path onto `base`, normally the directory
    /// holding the config file.
    pub fn resolve_paths(&mut self, base: &Path) {
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let DatasetSpec::Mnist {
            train_images,
            train_labels,
            test_images,
            test_labels,
            ..
        } = &mut self.dataset
        {
            for p in [train_images, train_labels, test_images, test_labels] {
                rebase(p);
            }
        }
        for p in [&mut self.checkpoint, &mut self.program].into_iter().flatten() {
            rebase(p);
        }
    }

    /// The configured program, parsed.
    pub fn load_program(&self) -> Result<Program> {
        match &self.program {
            None => Ok(addition_program()),
            Some(p) => Ok(Program::parse(&std::fs::read_to_string(p)?)?),
        }
    }
}
