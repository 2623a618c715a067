use std::fmt;
use std::str::FromStr;

use super::DatalogError;

/// Fixed-length boolean vector indexing an input or output fact enumeration.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Bitstring(Vec<bool>);

impl Bitstring {
    pub fn zeros(len: usize) -> Self {
        Bitstring(vec![false; len])
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Bitstring(bits)
    }

    /// Bitstring of length `len` with exactly the listed positions set.
    pub fn with_ones(len: usize, ones: &[usize]) -> Self {
        let mut b = Self::zeros(len);
        for &i in ones {
            b.0[i] = true;
        }
        b
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.0[i] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i)
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|b| **b).count()
    }

    /// Bitwise containment: every bit set in `self` is set in `other`.
    pub fn is_subset(&self, other: &Bitstring) -> bool {
        self.len() == other.len() && self.0.iter().zip(&other.0).all(|(a, b)| !*a || *b)
    }

    pub fn hamming(&self, other: &Bitstring) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }

    pub fn concat(&self, other: &Bitstring) -> Bitstring {
        let mut bits = self.0.clone();
        bits.extend_from_slice(&other.0);
        Bitstring(bits)
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            f.write_str(if *b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Bitstring {
    type Err = DatalogError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(DatalogError::BadBitstring(other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Bitstring)
    }
}

impl From<Vec<bool>> for Bitstring {
    fn from(bits: Vec<bool>) -> Self {
        Bitstring(bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_prints() {
        let b: Bitstring = "0101".parse().unwrap();
        assert_eq!(b.ones().collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(b.to_string(), "0101");
        assert!("01x".parse::<Bitstring>().is_err());
    }

    #[test]
    fn subset_and_hamming() {
        let a = Bitstring::with_ones(4, &[1]);
        let b = Bitstring::with_ones(4, &[1, 2]);
        assert!(a.is_subset(&b));
        assert!(!b.is_subset(&a));
        assert_eq!(a.hamming(&b), 1);
    }
}
