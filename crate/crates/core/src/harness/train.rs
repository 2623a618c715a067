//! Training loop: forward, synthesize, backward, Adam, once per batch.

use std::sync::Arc;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::datalog::Program;
use crate::error::{Error, Result};
use crate::grounding::{hard_choice, GroupSpec};
use crate::harness::config::{DatasetSpec, ExperimentConfig};
use crate::harness::data::{check_consistency, generate_synthetic_dataset, load_mnist_idx, make_pairs, relabel, Sample};
use crate::harness::metrics::{evaluate_model, Evaluation};
use crate::inverse::PreimageCache;
use crate::nn::{adam_step, AdamState, Image, Network};
use crate::semiring::AssignmentTable;
use crate::synth::{SampleContext, Synthesizer, SynthesizerState};

/// Offsets separating the random streams derived from one seed.
const SHUFFLE_STREAM: u64 = 1;
const SYNTH_STREAM: u64 = 2;

/// Outcome of one seeded run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub seed: u64,
    pub synthesizer: String,
    /// Output accuracy on the training set, per epoch, measured on the fly.
    pub train_output_acc: Vec<f64>,
    /// 1-based epoch whose parameters were evaluated; 0 for the initial network.
    pub epoch_selected: usize,
    pub output_acc: f64,
    pub symbol_acc: f64,
    pub confusion: Vec<Vec<u64>>,
    /// Fraction of training samples whose pseudolabel never changed;
    /// only for pseudolabel synthesizers.
    pub pseudolabel_stability: Option<f64>,
    pub implication_violations: usize,
}

/// A run's report together with the selected network and, for pseudolabel
/// synthesizers, the final synthesizer state.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub report: RunReport,
    pub network: Network,
    pub synth_state: SynthesizerState,
}

/// Data, program and caches shared by all seeds of an experiment.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
    pub table: Arc<AssignmentTable>,
    pub cache: Arc<PreimageCache>,
}

impl Prepared {
    /// Builds the datasets named by `config`, labels them with `program`,
    /// and checks that every sample's symbols derive its label.
    pub fn new(config: &ExperimentConfig, program: &Program) -> Result<Prepared> {
        config.validate()?;
        let (mut train, mut test) = load_datasets(config)?;
        relabel(&mut train, program)?;
        relabel(&mut test, program)?;
        Self::from_samples(train, test, program)
    }

    /// Uses the given samples as they are.
    pub fn from_samples(train: Vec<Sample>, test: Vec<Sample>, program: &Program) -> Result<Prepared> {
        check_consistency(&train, program)?;
        check_consistency(&test, program)?;
        let spec = GroupSpec::by_input_relation(program);
        let table = Arc::new(AssignmentTable::build(program, &spec)?);
        let cache = Arc::new(PreimageCache::build(&table));
        Ok(Prepared {
            train,
            test,
            table,
            cache,
        })
    }
}

fn load_datasets(config: &ExperimentConfig) -> Result<(Vec<Sample>, Vec<Sample>)> {
    match &config.dataset {
        DatasetSpec::Synthetic {
            train,
            test,
            noise,
            seed,
        } => Ok((
            generate_synthetic_dataset(*train, *seed, *noise, config.pairing)?,
            generate_synthetic_dataset(*test, seed.wrapping_add(1), *noise, config.test_pairing)?,
        )),
        DatasetSpec::Mnist {
            train_images,
            train_labels,
            test_images,
            test_labels,
            train,
            test,
            seed,
        } => {
            let tr = load_mnist_idx(train_images, train_labels)?;
            let te = load_mnist_idx(test_images, test_labels)?;
            Ok((
                make_pairs(&tr, *train, *seed, config.pairing)?,
                make_pairs(&te, *test, seed.wrapping_add(1), config.test_pairing)?,
            ))
        }
    }
}

fn check_layout(net: &Network, spec: &GroupSpec) -> Result<()> {
    let cfg = net.config();
    let expected = GroupSpec::contiguous(&vec![cfg.classes; cfg.pair_arity]);
    if spec != &expected {
        return Err(Error::Shape(format!(
            "network emits {} groups of {} logits, program expects {:?}",
            cfg.pair_arity,
            cfg.classes,
            spec.groups().iter().map(Vec::len).collect::<Vec<_>>()
        )));
    }
    Ok(())
}

/// Initial network for a run: the configured checkpoint, else a fresh one.
pub fn initial_network(config: &ExperimentConfig, seed: u64) -> Result<Network> {
    let net_cfg = config.network_config();
    match &config.checkpoint {
        Some(p) => Network::load(p, &net_cfg),
        None => Network::init(&net_cfg, seed),
    }
}

/// Runs one seed on prepared data starting from `net`.
pub fn train_prepared(config: &ExperimentConfig, data: &Prepared, seed: u64, mut net: Network) -> Result<TrainOutcome> {
    let spec = data.table.spec();
    check_layout(&net, spec)?;
    let mut synth = Synthesizer::new(
        config.synthesizer,
        data.table.clone(),
        data.cache.clone(),
        stream_seed(seed, SYNTH_STREAM),
        true,
    )?;
    if config.trace_pseudolabels {
        synth.state_mut().enable_trace();
    }
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, SHUFFLE_STREAM));
    let mut adam = AdamState::new(&net, config.learning_rate);
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut best = (net.clone(), 0usize, f64::NEG_INFINITY);
    let mut train_acc = Vec::with_capacity(config.epochs);
    let m = net.config().output_len();

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut correct = 0usize;
        for batch in order.chunks(config.batch_size) {
            let images: Vec<&[Image]> = batch.iter().map(|&i| data.train[i].images.as_slice()).collect();
            let (logits, cache) = net.forward(&images)?;
            let mut grad = Array2::<f64>::zeros((batch.len(), m));
            for (r, &i) in batch.iter().enumerate() {
                let s = &data.train[i];
                let z = logits.row(r);
                let z = z.as_slice().expect("logit rows are contiguous");
                correct += usize::from(data.table.derives(&hard_choice(z, spec), s.label));
                let ctx = SampleContext {
                    index: i,
                    logits: z,
                    label: s.label,
                    alpha: Some(&s.alpha),
                };
                let (loss, g) = synth.synthesize(ctx, epoch)?;
                if !loss.is_finite() || g.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFiniteLoss {
                        epoch: epoch + 1,
                        sample: i,
                    });
                }
                grad.row_mut(r).assign(&ndarray::ArrayView1::from(&g));
            }
            let grads = net.backward(&cache, &grad)?;
            adam_step(&mut net, &grads, &mut adam)?;
        }
        let acc = correct as f64 / data.train.len() as f64;
        train_acc.push(acc);
        if acc > best.2 {
            best = (net.clone(), epoch + 1, acc);
        }
    }

    let (network, epoch_selected, _) = best;
    let eval = evaluate_model(&network, &data.table, &data.test)?;
    let report = RunReport::new(seed, &synth, train_acc, epoch_selected, &eval);
    Ok(TrainOutcome {
        report,
        network,
        synth_state: synth.state().clone(),
    })
}

fn stream_seed(seed: u64, stream: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(stream)
}

impl RunReport {
    fn new(seed: u64, synth: &Synthesizer, train_output_acc: Vec<f64>, epoch_selected: usize, eval: &Evaluation) -> Self {
        RunReport {
            seed,
            synthesizer: synth.kind().name().to_string(),
            train_output_acc,
            epoch_selected,
            output_acc: eval.output_acc(),
            symbol_acc: eval.symbol_acc(),
            confusion: eval.confusion.clone(),
            pseudolabel_stability: synth.pseudolabel_stability(),
            implication_violations: eval.implication_violations,
        }
    }
}

/// Trains one seed from scratch (or from the configured checkpoint).
pub fn train(config: &ExperimentConfig, program: &Program, seed: u64) -> Result<RunReport> {
    let data = Prepared::new(config, program)?;
    let net = initial_network(config, seed)?;
    Ok(train_prepared(config, &data, seed, net)?.report)
}

/// Runs every configured seed, on up to `parallel` worker threads. Reports
/// come back in seed order and do not depend on `parallel`.
pub fn run_experiment(config: &ExperimentConfig, data: &Prepared, parallel: usize) -> Result<Vec<TrainOutcome>> {
    let run = |seed: u64| -> Result<TrainOutcome> {
        let net = initial_network(config, seed)?;
        train_prepared(config, data, seed, net)
    };
    let parallel = parallel.max(1);
    if parallel == 1 {
        return config.seeds.iter().map(|&s| run(s)).collect();
    }
    let mut results: Vec<Option<Result<TrainOutcome>>> = (0..config.seeds.len()).map(|_| None).collect();
    for (chunk_seeds, chunk_out) in config.seeds.chunks(parallel).zip(results.chunks_mut(parallel)) {
        std::thread::scope(|scope| {
            let handles: Vec<_> = chunk_seeds.iter().map(|&s| scope.spawn(move || run(s))).collect();
            for (slot, h) in chunk_out.iter_mut().zip(handles) {
                *slot = Some(h.join().expect("training thread panicked"));
            }
        });
    }
    results.into_iter().map(|r| r.expect("every seed ran")).collect()
}
