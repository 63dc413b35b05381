//! Rate-profile insertion and the convolutional pre-transform `u = v T`.
//!
//! `T` is the upper-triangular Toeplitz matrix built from the connection
//! polynomial; it is never materialized. Each output bit is computed from
//! the last `m + 1` carrier bits, which is also what the sequential decoder
//! uses to re-encode a partial path.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polar::BitWord;

/// Connection polynomial `g_0 + g_1 x + ... + g_m x^m` with `g_0 = g_m = 1`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConnPoly {
    coeffs: Vec<u8>,
}

impl ConnPoly {
    pub fn new(coeffs: Vec<u8>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidPolynomial("empty coefficient list".into()));
        }
        if let Some(&b) = coeffs.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidBit(b));
        }
        if coeffs[0] != 1 || coeffs[coeffs.len() - 1] != 1 {
            return Err(Error::InvalidPolynomial(format!(
                "g_0 and g_m must both be 1, got {coeffs:?}"
            )));
        }
        Ok(ConnPoly { coeffs })
    }

    /// `g = 1`: the pre-transform is the identity and PAC reduces to polar/RM coding.
    pub fn identity() -> Self {
        ConnPoly { coeffs: vec![1] }
    }

    pub fn coeffs(&self) -> &[u8] {
        &self.coeffs
    }

    /// Memory `m` (degree).
    pub fn memory(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Octal rendering, inverse of [`parse_octal_poly`].
    pub fn to_octal(&self) -> String {
        let mut value: u128 = 0;
        for &c in &self.coeffs {
            value = (value << 1) | c as u128;
        }
        format!("{value:o}")
    }

    /// Output bit `u_j` (0-based `j`) given the carrier prefix `v[..=j]`.
    #[inline]
    pub fn output_bit(&self, v: &[u8], j: usize) -> u8 {
        let mut acc = 0u8;
        for (i, &g) in self.coeffs.iter().enumerate() {
            if i > j {
                break;
            }
            acc ^= g & v[j - i];
        }
        acc
    }
}

impl fmt::Debug for ConnPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ConnPoly({})", self.to_octal())
    }
}

impl FromStr for ConnPoly {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_octal_poly(s)
    }
}

/// Octal string to coefficients, most significant bit first (`g_0`).
pub fn parse_octal_poly(text: &str) -> Result<ConnPoly> {
    let text = text.trim();
    if text.is_empty() {
        return Err(Error::Parse("empty polynomial string".into()));
    }
    let mut bits = Vec::with_capacity(3 * text.len());
    for ch in text.chars() {
        let d = ch
            .to_digit(8)
            .ok_or_else(|| Error::Parse(format!("non-octal digit {ch:?} in {text:?}")))?;
        bits.extend([(d >> 2) as u8 & 1, (d >> 1) as u8 & 1, d as u8 & 1]);
    }
    let first_one = bits
        .iter()
        .position(|&b| b == 1)
        .ok_or_else(|| Error::InvalidPolynomial(format!("{text:?} is zero")))?;
    ConnPoly::new(bits[first_one..].to_vec())
}

/// Information-position mask (the set A). `true` marks an information bit.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RateProfile {
    mask: Vec<bool>,
}

impl RateProfile {
    pub fn from_mask(mask: Vec<bool>) -> Self {
        RateProfile { mask }
    }

    pub fn all_frozen(n: usize) -> Self {
        RateProfile { mask: vec![false; n] }
    }

    /// Builds a profile from 1-based information positions (any order, no duplicates).
    pub fn from_positions(n: usize, positions: &[usize]) -> Result<Self> {
        let mut mask = vec![false; n];
        for &p in positions {
            if p == 0 || p > n {
                return Err(Error::IndexOutOfRange { index: p, len: n });
            }
            if mask[p - 1] {
                return Err(Error::InvalidConfig(format!("duplicate position {p}")));
            }
            mask[p - 1] = true;
        }
        Ok(RateProfile { mask })
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn k(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Is the 1-based `position` an information position?
    pub fn is_info(&self, position: usize) -> bool {
        self.mask[position - 1]
    }

    pub(crate) fn set(&mut self, position: usize, info: bool) {
        self.mask[position - 1] = info;
    }

    /// Ascending 1-based information positions.
    pub fn positions(&self) -> Vec<usize> {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i + 1))
            .collect()
    }

    /// Number of information bits inside the 1-based inclusive span.
    pub fn count_in(&self, first: usize, last: usize) -> usize {
        self.mask[first - 1..last].iter().filter(|&&b| b).count()
    }

    /// `self ⊆ other` as position sets.
    pub fn is_subset_of(&self, other: &RateProfile) -> bool {
        self.len() == other.len() && self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b)
    }
}

impl fmt::Debug for RateProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RateProfile(N={}, K={}, A={:?})", self.len(), self.k(), self.positions())
    }
}

/// Places `d` on the information positions in increasing order; frozen positions are 0.
pub fn insert_data(d: &BitWord, profile: &RateProfile) -> Result<BitWord> {
    let k = profile.k();
    if d.len() != k {
        return Err(Error::LengthMismatch { expected: k, actual: d.len() });
    }
    let mut data = d.as_slice().iter();
    let v = profile
        .mask()
        .iter()
        .map(|&info| if info { *data.next().unwrap() } else { 0 })
        .collect();
    BitWord::from_bits(v)
}

pub fn extract_data(v: &BitWord, profile: &RateProfile) -> Result<BitWord> {
    if v.len() != profile.len() {
        return Err(Error::LengthMismatch { expected: profile.len(), actual: v.len() });
    }
    let d = v
        .as_slice()
        .iter()
        .zip(profile.mask())
        .filter_map(|(&b, &info)| info.then_some(b))
        .collect();
    BitWord::from_bits(d)
}

/// `u_j = Σ_i g_i v_{j-i}` over GF(2), terms before the start dropped.
pub fn conv_encode(v: &BitWord, g: &ConnPoly) -> BitWord {
    let bits = v.as_slice();
    let u = (0..bits.len()).map(|j| g.output_bit(bits, j)).collect();
    BitWord::from_bits(u).expect("xor of bits is a bit")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polar::polar_encode;
    use proptest::prelude::*;

    #[test]
    fn octal_examples() {
        assert_eq!(parse_octal_poly("1").unwrap().coeffs(), &[1]);
        assert_eq!(parse_octal_poly("133").unwrap().coeffs(), &[1, 0, 1, 1, 0, 1, 1]);
        let g = parse_octal_poly("3211").unwrap();
        assert_eq!(g.coeffs(), &[1, 1, 0, 1, 0, 0, 0, 1, 0, 0, 1]);
        assert_eq!(g.memory(), 10);
        assert_eq!(g.to_octal(), "3211");
    }

    #[test]
    fn octal_errors() {
        assert!(matches!(parse_octal_poly("138"), Err(Error::Parse(_))));
        assert!(matches!(parse_octal_poly(""), Err(Error::Parse(_))));
        assert!(matches!(parse_octal_poly("0"), Err(Error::InvalidPolynomial(_))));
        // 0o132 = 1011010: g_m = 0
        assert!(matches!(parse_octal_poly("132"), Err(Error::InvalidPolynomial(_))));
    }

    #[test]
    fn insert_and_extract_examples() {
        let p = RateProfile::all_frozen(8);
        assert_eq!(insert_data(&BitWord::zeros(0), &p).unwrap(), BitWord::zeros(8));

        let p = RateProfile::from_mask(vec![false, true, false, true]);
        let d = BitWord::from_bits(vec![1, 1]).unwrap();
        let v = insert_data(&d, &p).unwrap();
        assert_eq!(v.as_slice(), &[0, 1, 0, 1]);
        assert_eq!(extract_data(&v, &p).unwrap(), d);
        assert_eq!(extract_data(&BitWord::zeros(4), &p).unwrap(), BitWord::zeros(2));

        assert!(matches!(
            insert_data(&BitWord::zeros(3), &p),
            Err(Error::LengthMismatch { expected: 2, actual: 3 })
        ));
        assert!(extract_data(&BitWord::zeros(8), &p).is_err());
    }

    #[test]
    fn conv_examples() {
        let v = BitWord::from_bits(vec![1, 0, 1, 1, 0, 0, 1, 0]).unwrap();
        assert_eq!(conv_encode(&v, &ConnPoly::identity()), v);

        let g = parse_octal_poly("133").unwrap();
        let e1 = BitWord::unit(8, 1).unwrap();
        assert_eq!(conv_encode(&e1, &g).as_slice(), &[1, 0, 1, 1, 0, 1, 1, 0]);
    }

    /// Oracle: explicit Toeplitz matrix product.
    fn toeplitz_product(v: &[u8], g: &[u8]) -> Vec<u8> {
        let n = v.len();
        let t = |row: usize, col: usize| -> u8 {
            if col >= row && col - row < g.len() {
                g[col - row]
            } else {
                0
            }
        };
        (0..n).map(|j| (0..n).fold(0, |acc, i| acc ^ (v[i] & t(i, j)))).collect()
    }

    fn poly() -> impl Strategy<Value = ConnPoly> {
        proptest::collection::vec(0u8..2, 0..10).prop_map(|mid| {
            let mut c = vec![1];
            if !mid.is_empty() {
                c.extend(mid);
                c.push(1);
            }
            ConnPoly::new(c).unwrap()
        })
    }

    fn word(n: usize) -> impl Strategy<Value = BitWord> {
        proptest::collection::vec(0u8..2, n).prop_map(|v| BitWord::from_bits(v).unwrap())
    }

    proptest! {
        #[test]
        fn conv_matches_toeplitz(v in word(32), g in poly()) {
            let u = conv_encode(&v, &g);
            let expected = toeplitz_product(v.as_slice(), g.coeffs());
            prop_assert_eq!(u.as_slice(), expected.as_slice());
        }

        #[test]
        fn conv_linear(a in word(64), b in word(64), g in poly()) {
            prop_assert_eq!(conv_encode(&(&a ^ &b), &g), &conv_encode(&a, &g) ^ &conv_encode(&b, &g));
        }

        #[test]
        fn conv_prefix_causal(v in word(32), g in poly(), flip in 0usize..32) {
            let mut w = v.clone().into_inner();
            w[flip] ^= 1;
            let w = BitWord::from_bits(w).unwrap();
            let (uv, uw) = (conv_encode(&v, &g), conv_encode(&w, &g));
            prop_assert_eq!(&uv.as_slice()[..flip], &uw.as_slice()[..flip]);
            // injective: unit diagonal means the flipped position itself changes
            prop_assert_ne!(uv[flip], uw[flip]);
        }

        #[test]
        fn insert_extract_round_trip(mask in proptest::collection::vec(any::<bool>(), 16), seed in any::<u64>()) {
            let p = RateProfile::from_mask(mask);
            let d = BitWord::from_bits((0..p.k()).map(|i| ((seed >> (i % 64)) & 1) as u8).collect()).unwrap();
            let v = insert_data(&d, &p).unwrap();
            prop_assert_eq!(extract_data(&v, &p).unwrap(), d);
        }

        #[test]
        fn identity_poly_is_plain_polar(mask in proptest::collection::vec(any::<bool>(), 16), bits in word(16)) {
            let p = RateProfile::from_mask(mask);
            let d = extract_data(&bits, &p).unwrap();
            let v = insert_data(&d, &p).unwrap();
            let pac = polar_encode(&conv_encode(&v, &ConnPoly::identity())).unwrap();
            prop_assert_eq!(pac, polar_encode(&v).unwrap());
        }
    }
}
