//! Training samples: synthetic glyph pairs, MNIST IDX ingestion, and pairing
//! policies.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use byteorder::{BigEndian, ReadBytesExt};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::glyphs::{prototype, GLYPH_SIZE};
use crate::datalog::{Bitstring, Program};
use crate::error::{Error, Result};
use crate::grounding::GroupSpec;
use crate::nn::Image;

pub const MAX_NOISE_RATE: f64 = 0.3;
pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;
pub const DEFAULT_REPLACEMENT: f64 = 0.1;

/// One training or test point: a tuple of digit images, its output label, and
/// the hidden ground-truth symbols used only by evaluation and the Ideal
/// synthesizer.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub images: Vec<Image>,
    /// Output position of the label fact.
    pub label: usize,
    /// Ground-truth symbol bitstring, one-hot per image.
    pub alpha: Bitstring,
    /// Digit class of each image.
    pub digits: Vec<usize>,
}

impl Sample {
    /// Sample whose label is the digit sum and whose symbols use 10 classes
    /// per image.
    pub fn from_digits(images: Vec<Image>, digits: Vec<usize>) -> Sample {
        let spec = GroupSpec::contiguous(&vec![10; digits.len()]);
        Sample {
            images,
            label: digits.iter().sum(),
            alpha: spec.bitstring_of(&digits),
            digits,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum Pairing {
    /// Independent digits; drawn without replacement from a digit pool.
    Uniform,
    /// Both images show the same digit. From a finite pool, the given
    /// fraction of samples may reuse digits.
    SameDigit {
        #[serde(default = "default_replacement")]
        replacement: f64,
    },
}

fn default_replacement() -> f64 {
    DEFAULT_REPLACEMENT
}

impl Default for Pairing {
    fn default() -> Self {
        Pairing::Uniform
    }
}

impl Pairing {
    pub fn same_digit() -> Self {
        Pairing::SameDigit {
            replacement: DEFAULT_REPLACEMENT,
        }
    }
}

/// Prototype of `digit` with each pixel independently replaced by a random
/// bit with probability `noise_rate`.
pub fn noisy_glyph<R: Rng + ?Sized>(digit: usize, noise_rate: f64, rng: &mut R) -> Image {
    let mut img = prototype(digit);
    for p in &mut img.pixels {
        if rng.random::<f64>() < noise_rate {
            *p = if rng.random::<bool>() { 1.0 } else { 0.0 };
        }
    }
    img
}

/// `count` digit pairs of noisy glyphs labeled by their sum.
pub fn generate_synthetic_dataset(count: usize, seed: u64, noise_rate: f64, pairing: Pairing) -> Result<Vec<Sample>> {
    if !(0.0..=MAX_NOISE_RATE).contains(&noise_rate) {
        return Err(Error::InvalidConfig(format!(
            "noise rate {noise_rate} outside [0, {MAX_NOISE_RATE}]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..count)
        .map(|_| {
            let d1 = rng.random_range(0..10);
            let d2 = match pairing {
                Pairing::Uniform => rng.random_range(0..10),
                Pairing::SameDigit { .. } => d1,
            };
            let images = vec![noisy_glyph(d1, noise_rate, &mut rng), noisy_glyph(d2, noise_rate, &mut rng)];
            Sample::from_digits(images, vec![d1, d2])
        })
        .collect();
    Ok(samples)
}

/// Glyph side length, exposed for configuring networks on synthetic data.
pub const SYNTHETIC_IMAGE_SIZE: usize = GLYPH_SIZE;

fn read_magic<R: Read>(r: &mut R, expected: u32, what: &str) -> Result<()> {
    let magic = r
        .read_u32::<BigEndian>()
        .map_err(|_| Error::Format(format!("{what}: truncated header")))?;
    if magic != expected {
        return Err(Error::Format(format!(
            "{what}: bad magic {magic:#010x}, expected {expected:#010x}"
        )));
    }
    Ok(())
}

fn read_u32(r: &mut impl Read, what: &str) -> Result<u32> {
    r.read_u32::<BigEndian>()
        .map_err(|_| Error::Format(format!("{what}: truncated header")))
}

fn read_exact_or(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::Format(format!("{what}: truncated data")))
}

/// Parses an IDX image file and its label file into `(image, class)` pairs;
/// intensities are scaled to `[0, 1]`.
pub fn load_mnist_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Vec<(Image, usize)>> {
    let mut images = BufReader::new(File::open(images_path)?);
    let mut labels = BufReader::new(File::open(labels_path)?);
    parse_mnist_idx(&mut images, &mut labels)
}

pub fn parse_mnist_idx(images: &mut impl Read, labels: &mut impl Read) -> Result<Vec<(Image, usize)>> {
    read_magic(images, IDX_IMAGES_MAGIC, "images")?;
    let n_images = read_u32(images, "images")? as usize;
    let rows = read_u32(images, "images")? as usize;
    let cols = read_u32(images, "images")? as usize;
    read_magic(labels, IDX_LABELS_MAGIC, "labels")?;
    let n_labels = read_u32(labels, "labels")? as usize;
    if n_images != n_labels {
        return Err(Error::CountMismatch {
            images: n_images,
            labels: n_labels,
        });
    }
    let mut classes = vec![0u8; n_labels];
    read_exact_or(labels, &mut classes, "labels")?;
    let mut buf = vec![0u8; rows * cols];
    let mut out = Vec::with_capacity(n_images);
    for &class in &classes {
        read_exact_or(images, &mut buf, "images")?;
        let pixels = buf.iter().map(|&b| f64::from(b) / 255.0).collect();
        out.push((Image::new(rows, cols, pixels)?, usize::from(class)));
    }
    Ok(out)
}

/// Pairs individual digits into `count` samples under `policy`.
pub fn make_pairs(digits: &[(Image, usize)], count: usize, seed: u64, policy: Pairing) -> Result<Vec<Sample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pair = |a: usize, b: usize| {
        Sample::from_digits(
            vec![digits[a].0.clone(), digits[b].0.clone()],
            vec![digits[a].1, digits[b].1],
        )
    };
    match policy {
        Pairing::Uniform => {
            if 2 * count > digits.len() {
                return Err(Error::InsufficientDigits {
                    needed: 2 * count,
                    available: digits.len(),
                });
            }
            let mut order: Vec<usize> = (0..digits.len()).collect();
            order.shuffle(&mut rng);
            Ok(order[..2 * count].chunks(2).map(|c| pair(c[0], c[1])).collect())
        }
        Pairing::SameDigit { replacement } => {
            if !(0.0..=1.0).contains(&replacement) {
                return Err(Error::InvalidConfig(format!(
                    "replacement fraction {replacement} outside [0, 1]"
                )));
            }
            let reused = (replacement * count as f64).round() as usize;
            let fresh = count - reused;
            let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); 10];
            for (i, (_, c)) in digits.iter().enumerate() {
                if *c >= 10 {
                    return Err(Error::Format(format!("digit class {c} out of range")));
                }
                by_class[*c].push(i);
            }
            let mut fresh_pairs = Vec::new();
            for pool in &mut by_class {
                pool.shuffle(&mut rng);
                fresh_pairs.extend(pool.chunks_exact(2).map(|c| (c[0], c[1])));
            }
            if fresh_pairs.len() < fresh {
                return Err(Error::InsufficientDigits {
                    needed: 2 * fresh,
                    available: 2 * fresh_pairs.len(),
                });
            }
            fresh_pairs.shuffle(&mut rng);
            fresh_pairs.truncate(fresh);
            for _ in 0..reused {
                let a = rng.random_range(0..digits.len());
                let pool = &by_class[digits[a].1];
                let b = if pool.len() > 1 {
                    loop {
                        let b = pool[rng.random_range(0..pool.len())];
                        if b != a {
                            break b;
                        }
                    }
                } else {
                    a
                };
                fresh_pairs.push((a, b));
            }
            fresh_pairs.shuffle(&mut rng);
            Ok(fresh_pairs.into_iter().map(|(a, b)| pair(a, b)).collect())
        }
    }
}

/// Relabels every sample with the output its symbols derive under `program`
/// (the lowest such output position).
pub fn relabel(samples: &mut [Sample], program: &Program) -> Result<()> {
    for s in samples {
        let out = program.evaluate(&s.alpha)?;
        s.label = out
            .ones()
            .next()
            .ok_or_else(|| Error::InvalidConfig(format!("symbols {} derive no output", s.alpha)))?;
    }
    Ok(())
}

/// Every sample's symbols derive its label under `program`.
pub fn check_consistency(samples: &[Sample], program: &Program) -> Result<()> {
    for (i, s) in samples.iter().enumerate() {
        let out = program.evaluate(&s.alpha)?;
        if s.label >= out.len() || !out.get(s.label) {
            return Err(Error::InvalidConfig(format!(
                "sample {i}: symbols {} do not derive label {}",
                s.alpha, s.label
            )));
        }
    }
    Ok(())
}
