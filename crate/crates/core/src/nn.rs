//! Feed-forward network with hand-written reverse-mode gradients.
//!
//! A shared encoder (dense layers with rectifier activations followed by a
//! linear head) is applied to every image of a sample; the per-image logits
//! are concatenated, so a pair of images with 10 classes each yields 20
//! logits, one per input fact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Grayscale image, row-major, intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<f64>,
}

impl Image {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Image> {
        if pixels.len() != height * width {
            return Err(Error::Shape(format!(
                "{height}x{width} image needs {} pixels, got {}",
                height * width,
                pixels.len()
            )));
        }
        Ok(Image {
            height,
            width,
            pixels,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitScheme {
    /// Weights and biases uniform in `±1/sqrt(fan_in)`.
    #[default]
    UniformFanIn,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkConfig {
    pub image_height: usize,
    pub image_width: usize,
    /// Images per sample; the encoder is shared across them.
    pub pair_arity: usize,
    /// Hidden layer widths of the encoder.
    pub hidden: Vec<usize>,
    /// Logits per image.
    pub classes: usize,
    pub init: InitScheme,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            image_height: 16,
            image_width: 16,
            pair_arity: 2,
            hidden: vec![512, 256],
            classes: 10,
            init: InitScheme::UniformFanIn,
        }
    }
}

impl NetworkConfig {
    /// Encoder for 28×28 MNIST digits.
    pub fn mnist() -> Self {
        NetworkConfig {
            image_height: 28,
            image_width: 28,
            ..Self::default()
        }
    }

    pub fn input_dim(&self) -> usize {
        self.image_height * self.image_width
    }

    /// Total logits per sample, `m`.
    pub fn output_len(&self) -> usize {
        self.pair_arity * self.classes
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim() == 0 || self.pair_arity == 0 || self.classes == 0 {
            return Err(Error::Shape(
                "image size, pair arity and classes must be positive".into(),
            ));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Shape("hidden layers must be non-empty".into()));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` of each dense layer.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut dims = vec![self.input_dim()];
        dims.extend(&self.hidden);
        dims.push(self.classes);
        dims.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn digest(&self) -> [u8; 32] {
        let text = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(text.as_bytes()).into()
    }
}

/// Fully connected layer computing `x · weight + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `fan_in × fan_out`.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Dense {
        Dense {
            weight: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }

    fn params(&self) -> impl Iterator<Item = &f64> {
        self.weight.iter().chain(self.bias.iter())
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weight.iter_mut().chain(self.bias.iter_mut())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    config: NetworkConfig,
    layers: Vec<Dense>,
    /// Bumped on every parameter update; forward caches remember it.
    version: u64,
}

/// Parameter gradients, shaped like the network's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(Dense::params)
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|g| g.is_finite())
    }
}

/// Activations retained by [`Network::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    version: u64,
    batch: usize,
    /// Input to each dense layer; entry 0 is the stacked images.
    inputs: Vec<Array2<f64>>,
}

impl Network {
    pub fn init(config: &NetworkConfig, seed: u64) -> Result<Network> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = config
            .layer_shapes()
            .into_iter()
            .map(|(fan_in, fan_out)| {
                let bound = 1.0 / (fan_in as f64).sqrt();
                let mut layer = Dense::zeros(fan_in, fan_out);
                match config.init {
                    InitScheme::UniformFanIn => {
                        for p in layer.params_mut() {
                            *p = rng.random_range(-bound..bound);
                        }
                    }
                }
                layer
            })
            .collect();
        Ok(Network {
            config: config.clone(),
            layers,
            version: 0,
        })
    }

    /// Network with explicitly given parameters.
    pub fn from_layers(config: &NetworkConfig, layers: Vec<Dense>) -> Result<Network> {
        config.validate()?;
        let shapes = config.layer_shapes();
        if shapes.len() != layers.len() {
            return Err(Error::Shape(format!(
                "config has {} layers, got {}",
                shapes.len(),
                layers.len()
            )));
        }
        for (i, ((fan_in, fan_out), l)) in shapes.iter().zip(&layers).enumerate() {
            if l.weight.dim() != (*fan_in, *fan_out) || l.bias.len() != *fan_out {
                return Err(Error::Shape(format!(
                    "layer {i}: expected {fan_in}x{fan_out}, got {:?} with {} biases",
                    l.weight.dim(),
                    l.bias.len()
                )));
            }
        }
        if !layers.iter().flat_map(Dense::params).all(|p| p.is_finite()) {
            return Err(Error::Shape("non-finite parameter".into()));
        }
        Ok(Network {
            config: config.clone(),
            layers,
            version: 0,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    /// Logits (`batch × m`) for a batch of samples, each given as its images.
    pub fn forward(&self, batch: &[&[Image]]) -> Result<(Array2<f64>, ForwardCache)> {
        let cfg = &self.config;
        let d = cfg.input_dim();
        let rows = batch.len() * cfg.pair_arity;
        let mut x = Array2::<f64>::zeros((rows, d));
        for (b, images) in batch.iter().enumerate() {
            if images.len() != cfg.pair_arity {
                return Err(Error::Shape(format!(
                    "sample {b} has {} images, expected {}",
                    images.len(),
                    cfg.pair_arity
                )));
            }
            for (k, img) in images.iter().enumerate() {
                if img.height != cfg.image_height || img.width != cfg.image_width {
                    return Err(Error::Shape(format!(
                        "expected {}x{} image, got {}x{}",
                        cfg.image_height, cfg.image_width, img.height, img.width
                    )));
                }
                x.row_mut(b * cfg.pair_arity + k)
                    .as_slice_mut()
                    .expect("row-major")
                    .copy_from_slice(&img.pixels);
            }
        }

        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut h = x;
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = h.dot(&layer.weight);
            z += &layer.bias;
            if i < last {
                z.mapv_inplace(|v| v.max(0.0));
            }
            inputs.push(h);
            h = z;
        }
        // Rows for one sample are consecutive, so the per-image logits
        // concatenate by reshaping.
        let logits = h
            .into_shape_with_order((batch.len(), cfg.output_len()))
            .expect("contiguous logits");
        Ok((
            logits,
            ForwardCache {
                version: self.version,
                batch: batch.len(),
                inputs,
            },
        ))
    }

    /// Gradients of `(1/B) Σ_b ⟨z_b, G_b⟩` with respect to every parameter,
    /// where `G` is the loss gradient at the logits.
    pub fn backward(&self, cache: &ForwardCache, grad_logits: &Array2<f64>) -> Result<Gradients> {
        if cache.version != self.version || cache.inputs.len() != self.layers.len() {
            return Err(Error::StaleCache);
        }
        let cfg = &self.config;
        if grad_logits.dim() != (cache.batch, cfg.output_len()) {
            return Err(Error::Shape(format!(
                "gradient is {:?}, expected ({}, {})",
                grad_logits.dim(),
                cache.batch,
                cfg.output_len()
            )));
        }
        let scale = 1.0 / cache.batch.max(1) as f64;
        let mut dz = grad_logits
            .to_owned()
            .into_shape_with_order((cache.batch * cfg.pair_arity, cfg.classes))
            .expect("contiguous gradient");
        dz *= scale;

        let mut grads: Vec<Dense> = Vec::with_capacity(self.layers.len());
        for i in (0..self.layers.len()).rev() {
            let input = &cache.inputs[i];
            let weight = input.t().dot(&dz);
            let bias = dz.sum_axis(Axis(0));
            if i > 0 {
                let mut dh = dz.dot(&self.layers[i].weight.t());
                // Rectifier mask: the input to layer i is the activation of layer i-1.
                dh.zip_mut_with(input, |g, &a| {
                    if a <= 0.0 {
                        *g = 0.0;
                    }
                });
                dz = dh;
            }
            grads.push(Dense { weight, bias });
        }
        grads.reverse();
        Ok(Gradients { layers: grads })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>, config: &NetworkConfig) -> Result<Network> {
        let mut r = BufReader::new(File::open(path)?);
        Self::read_from(&mut r, config)
    }

    /// Checkpoint container, little-endian:
    ///
    /// ```text
    /// b"SYMC" | u32 version = 1 | [u8; 32] config digest | u32 layer count
    /// per layer: u32 fan_in | u32 fan_out | f64 weights (row-major) | f64 biases
    /// ```
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_u32::<LittleEndian>(CHECKPOINT_VERSION)?;
        w.write_all(&self.config.digest())?;
        w.write_u32::<LittleEndian>(self.layers.len() as u32)?;
        for l in &self.layers {
            let (fan_in, fan_out) = l.weight.dim();
            w.write_u32::<LittleEndian>(fan_in as u32)?;
            w.write_u32::<LittleEndian>(fan_out as u32)?;
            for &v in l.params() {
                w.write_f64::<LittleEndian>(v)?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R, config: &NetworkConfig) -> Result<Network> {
        let truncated = |e: std::io::Error| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::Format("truncated checkpoint".into()),
            _ => Error::Io(e),
        };
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(truncated)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::Format("not a checkpoint (bad magic)".into()));
        }
        let version = r.read_u32::<LittleEndian>().map_err(truncated)?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint version {version}"
            )));
        }
        let mut digest = [0u8; 32];
        r.read_exact(&mut digest).map_err(truncated)?;
        if digest != config.digest() {
            return Err(Error::Format(
                "checkpoint was written for a different network config".into(),
            ));
        }
        let count = r.read_u32::<LittleEndian>().map_err(truncated)? as usize;
        let mut layers = Vec::with_capacity(count);
        for _ in 0..count {
            let fan_in = r.read_u32::<LittleEndian>().map_err(truncated)? as usize;
            let fan_out = r.read_u32::<LittleEndian>().map_err(truncated)? as usize;
            let mut layer = Dense::zeros(fan_in, fan_out);
            for p in layer.params_mut() {
                *p = r.read_f64::<LittleEndian>().map_err(truncated)?;
            }
            layers.push(layer);
        }
        Network::from_layers(config, layers)
    }
}

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"SYMC";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    m: Vec<Dense>,
    v: Vec<Dense>,
}

impl AdamState {
    pub fn new(net: &Network, learning_rate: f64) -> AdamState {
        let zeros = || {
            net.layers
                .iter()
                .map(|l| Dense::zeros(l.weight.nrows(), l.weight.ncols()))
                .collect()
        };
        AdamState {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: zeros(),
            v: zeros(),
        }
    }

    pub fn first_moments(&self) -> impl Iterator<Item = &f64> {
        self.m.iter().flat_map(Dense::params)
    }

    pub fn second_moments(&self) -> impl Iterator<Item = &f64> {
        self.v.iter().flat_map(Dense::params)
    }
}

/// Bias-corrected Adam update. Non-finite gradients leave everything untouched.
pub fn adam_step(net: &mut Network, grads: &Gradients, state: &mut AdamState) -> Result<()> {
    let shapes_match = grads.layers.len() == net.layers.len()
        && grads
            .layers
            .iter()
            .zip(&net.layers)
            .all(|(g, l)| g.weight.dim() == l.weight.dim() && g.bias.len() == l.bias.len());
    if !shapes_match || state.m.len() != net.layers.len() {
        return Err(Error::Shape("gradients do not match the network".into()));
    }
    if !grads.is_finite() {
        return Err(Error::NonFiniteGradient);
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    let lr = state.learning_rate;
    let eps = state.epsilon;
    for (((layer, g), m), v) in net
        .layers
        .iter_mut()
        .zip(&grads.layers)
        .zip(&mut state.m)
        .zip(&mut state.v)
    {
        for (((p, &g), m), v) in layer
            .params_mut()
            .zip(g.params())
            .zip(m.params_mut())
            .zip(v.params_mut())
        {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    net.version += 1;
    Ok(())
}
