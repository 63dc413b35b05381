//! Rate-profile construction: Bhattacharyya parameters and cutoff rates,
//! the node cutoff tree, RM and polar profiles, taming and merging.

mod io;
mod taming;
mod tree;

pub use io::{format_profile, parse_profile, read_profile, write_profile};
pub use taming::{merge_profiles, tame_profile, tame_profile_multilevel};
pub use tree::{node_cutoff_tree, node_cutoff_tree_sampled, NodeCutoffTree, NodeEstimate};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polar::{log2_exact, row_weight};
use crate::pretransform::RateProfile;

/// Slack added before flooring `len · R0` into a cap.
pub const DEFAULT_EPSILON: f64 = 0.1;
pub const DEFAULT_MC_SAMPLES: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelModel {
    /// BPSK over AWGN; `esn0` is the linear Es/N0 per channel use.
    BiAwgn { esn0: f64 },
    Bec { erasure: f64 },
}

impl ChannelModel {
    pub fn biawgn(esn0: f64) -> Result<Self> {
        let ch = ChannelModel::BiAwgn { esn0 };
        ch.validate()?;
        Ok(ch)
    }

    /// BI-AWGN at `Eb/N0` (dB) for a code of rate `rate`.
    pub fn biawgn_ebn0(ebn0_db: f64, rate: f64) -> Result<Self> {
        Self::biawgn(crate::channel::ebn0_to_esn0(ebn0_db, rate)?)
    }

    pub fn bec(erasure: f64) -> Result<Self> {
        let ch = ChannelModel::Bec { erasure };
        ch.validate()?;
        Ok(ch)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ChannelModel::BiAwgn { esn0 } if esn0.is_nan() || esn0 <= 0.0 => Err(
                Error::InvalidChannel(format!("Es/N0 must be positive, got {esn0}")),
            ),
            ChannelModel::Bec { erasure } if !(0.0..=1.0).contains(&erasure) => Err(
                Error::InvalidChannel(format!("erasure probability {erasure} outside [0, 1]")),
            ),
            _ => Ok(()),
        }
    }
}

/// `Z(W)`: `exp(-Es/N0)` for BI-AWGN, the erasure probability for the BEC.
pub fn bhattacharyya_base(ch: &ChannelModel) -> f64 {
    match *ch {
        ChannelModel::BiAwgn { esn0 } => (-esn0).exp(),
        ChannelModel::Bec { erasure } => erasure,
    }
}

/// `R0 = log2(2 / (1 + Z))`, in bits.
pub fn cutoff_from_z(z: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::Domain(format!("Bhattacharyya parameter {z} outside [0, 1]")));
    }
    Ok(1.0 - (1.0 + z).log2())
}

/// Bit-channel cutoff rates `b_1..b_N`, used as the Fano metric bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasVector {
    values: Vec<f64>,
}

impl BiasVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain(format!("bias value {v} outside [0, 1]")));
        }
        Ok(BiasVector { values })
    }

    /// All-zero bias (plain log-likelihood metric).
    pub fn zeros(n: usize) -> Self {
        BiasVector { values: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Bias of the 1-based position `i`.
    pub fn get(&self, i: usize) -> f64 {
        self.values[i - 1]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

pub fn bias_vector(ch: &ChannelModel, n: usize, mc_samples: usize, seed: u64) -> Result<BiasVector> {
    let m = log2_exact(n)? as usize;
    let tree = node_cutoff_tree(ch, n, m, DEFAULT_EPSILON, mc_samples, seed)?;
    BiasVector::new(tree.level(m).iter().map(|e| e.r0).collect())
}

/// `K(r, m) = Σ_{j ≤ r} C(m, j)` for every order `r`, i.e. the valid RM dimensions at `N = 2^m`.
pub fn rm_dimensions(n: usize) -> Result<Vec<usize>> {
    let m = log2_exact(n)? as usize;
    let mut out = Vec::with_capacity(m + 1);
    let (mut binom, mut total) = (1usize, 0usize);
    for j in 0..=m {
        total += binom;
        out.push(total);
        binom = binom * (m - j) / (j + 1);
    }
    Ok(out)
}

pub fn is_rm_dimension(n: usize, k: usize) -> bool {
    rm_dimensions(n).map(|d| d.contains(&k)).unwrap_or(false)
}

/// The `K` positions of largest row weight. A `K` that is not an RM dimension
/// takes the partial weight class from its largest indices.
pub fn rm_profile(n: usize, k: usize) -> Result<RateProfile> {
    log2_exact(n)?;
    if k > n {
        return Err(Error::InvalidConfig(format!("K={k} exceeds N={n}")));
    }
    let mut order: Vec<usize> = (1..=n).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(row_weight(n, i).unwrap()), std::cmp::Reverse(i)));
    RateProfile::from_positions(n, &order[..k])
}

/// The `K` positions with smallest `Z`, ties toward the larger index.
pub fn profile_from_reliability(z: &[f64], k: usize) -> Result<RateProfile> {
    let n = z.len();
    if k > n {
        return Err(Error::InvalidConfig(format!("K={k} exceeds N={n}")));
    }
    let mut order: Vec<usize> = (1..=n).collect();
    order.sort_by(|&a, &b| z[a - 1].total_cmp(&z[b - 1]).then(b.cmp(&a)));
    RateProfile::from_positions(n, &order[..k])
}

pub fn polar_profile(
    ch: &ChannelModel,
    n: usize,
    k: usize,
    mc_samples: usize,
    seed: u64,
) -> Result<RateProfile> {
    let m = log2_exact(n)? as usize;
    if k > n {
        return Err(Error::InvalidConfig(format!("K={k} exceeds N={n}")));
    }
    let tree = node_cutoff_tree(ch, n, m, DEFAULT_EPSILON, mc_samples, seed)?;
    let z: Vec<f64> = tree.level(m).iter().map(|e| e.z).collect();
    profile_from_reliability(&z, k)
}
