//! Polar transform `x = u F^{⊗n}` with `F = [[1,0],[1,1]]`, natural index order.

use std::fmt;
use std::ops::{BitXor, Index};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pretransform::{ConnPoly, RateProfile};

/// A vector over GF(2), one byte per bit.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct BitWord(Vec<u8>);

impl BitWord {
    pub fn zeros(len: usize) -> Self {
        BitWord(vec![0; len])
    }

    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if let Some(&b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidBit(b));
        }
        Ok(BitWord(bits))
    }

    /// Unit vector with a one at the 1-based `position`.
    pub fn unit(len: usize, position: usize) -> Result<Self> {
        if position == 0 || position > len {
            return Err(Error::IndexOutOfRange { index: position, len });
        }
        let mut w = Self::zeros(len);
        w.0[position - 1] = 1;
        Ok(w)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }

    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }
}

impl Index<usize> for BitWord {
    type Output = u8;
    fn index(&self, i: usize) -> &u8 {
        &self.0[i]
    }
}

impl BitXor for &BitWord {
    type Output = BitWord;
    fn bitxor(self, rhs: &BitWord) -> BitWord {
        assert_eq!(self.len(), rhs.len(), "xor of words with different lengths");
        BitWord(self.0.iter().zip(&rhs.0).map(|(a, b)| a ^ b).collect())
    }
}

impl fmt::Debug for BitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitWord(")?;
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        write!(f, ")")
    }
}

pub(crate) fn log2_exact(len: usize) -> Result<u32> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(len));
    }
    Ok(len.trailing_zeros())
}

/// In-place butterfly: after the call `bits` holds `bits · F^{⊗n}`.
pub(crate) fn polar_transform_in_place(bits: &mut [u8]) {
    let n = bits.len();
    let mut half = n / 2;
    while half >= 1 {
        for block in (0..n).step_by(2 * half) {
            for i in block..block + half {
                bits[i] ^= bits[i + half];
            }
        }
        half /= 2;
    }
}

pub fn polar_encode(u: &BitWord) -> Result<BitWord> {
    log2_exact(u.len())?;
    let mut x = u.0.clone();
    polar_transform_in_place(&mut x);
    Ok(BitWord(x))
}

/// Hamming weight of row `i` (1-based) of `F^{⊗n}` for blocklength `n_len`.
pub fn row_weight(n_len: usize, i: usize) -> Result<usize> {
    log2_exact(n_len)?;
    if i == 0 || i > n_len {
        return Err(Error::IndexOutOfRange { index: i, len: n_len });
    }
    Ok(1usize << (i - 1).count_ones())
}

/// Full identity of a PAC code: rate profile (which fixes N and K) plus
/// the connection polynomial of the pre-transform.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSpec {
    profile: RateProfile,
    poly: ConnPoly,
}

impl CodeSpec {
    pub fn new(profile: RateProfile, poly: ConnPoly) -> Result<Self> {
        log2_exact(profile.len())?;
        Ok(CodeSpec { profile, poly })
    }

    pub fn n(&self) -> usize {
        self.profile.len()
    }

    pub fn k(&self) -> usize {
        self.profile.k()
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n() as f64
    }

    pub fn profile(&self) -> &RateProfile {
        &self.profile
    }

    pub fn poly(&self) -> &ConnPoly {
        &self.poly
    }

    /// `d -> v -> u -> x`. Returns `(v, u, x)`.
    pub fn encode(&self, data: &BitWord) -> Result<(BitWord, BitWord, BitWord)> {
        let v = crate::pretransform::insert_data(data, &self.profile)?;
        let u = crate::pretransform::conv_encode(&v, &self.poly);
        let x = polar_encode(&u)?;
        Ok((v, u, x))
    }
}
