//! Fano sequential decoding over the PAC code tree.

use serde::{Deserialize, Serialize};

use crate::construction::BiasVector;
use crate::demapper::{softplus2, LlrLattice};
use crate::error::{Error, Result};
use crate::polar::{BitWord, CodeSpec};

pub const DEFAULT_DELTA: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FanoConfig {
    /// Threshold spacing, in metric bits.
    pub delta: f64,
    pub bias: BiasVector,
    /// Visit budget; `None` means unlimited.
    pub max_visits: Option<u64>,
}

impl FanoConfig {
    pub fn new(bias: BiasVector) -> Self {
        FanoConfig { delta: DEFAULT_DELTA, bias, max_visits: None }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_max_visits(mut self, max_visits: Option<u64>) -> Self {
        self.max_visits = max_visits;
        self
    }

    fn validate(&self, n: usize) -> Result<()> {
        if !self.delta.is_finite() || self.delta <= 0.0 {
            return Err(Error::InvalidConfig(format!("delta must be positive, got {}", self.delta)));
        }
        if self.bias.len() != n {
            return Err(Error::LengthMismatch { expected: n, actual: self.bias.len() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecodeOutcome {
    Completed,
    VisitBudgetExceeded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult {
    /// Estimated data carrier. Undecided tail positions are zero when the budget ran out.
    pub v_hat: BitWord,
    pub u_hat: BitWord,
    /// Number of forward moves into a node, repeats included.
    pub visits: u64,
    pub outcome: DecodeOutcome,
}

/// Branch metric `1 - log2(1 + 2^{-z (-1)^u}) - b`.
#[inline]
pub fn bit_metric(z: f64, u: u8, b: f64) -> f64 {
    let signed = if u == 0 { z } else { -z };
    1.0 - softplus2(-signed) - b
}

/// Average number of visits per decoded bit, `Σ visits / (count · N)`.
pub fn anv(results: &[DecodeResult], n: usize) -> Result<f64> {
    if results.is_empty() {
        return Err(Error::InvalidConfig("ANV of an empty collection".into()));
    }
    if n == 0 {
        return Err(Error::InvalidConfig("ANV with N = 0".into()));
    }
    let total: u64 = results.iter().map(|r| r.visits).sum();
    Ok(total as f64 / (results.len() as f64 * n as f64))
}

/// Decodes from a freshly initialized lattice.
pub fn decode(lattice: LlrLattice, spec: &CodeSpec, cfg: &FanoConfig) -> Result<DecodeResult> {
    run(lattice, spec, cfg, |_, _| {})
}

/// Convenience wrapper that builds the lattice from channel LLRs.
pub fn decode_llrs(llrs: &[f64], spec: &CodeSpec, cfg: &FanoConfig) -> Result<DecodeResult> {
    decode(LlrLattice::init(llrs)?, spec, cfg)
}

/// As [`decode`], also calling `on_forward(prefix, threshold)` after every forward move.
pub fn decode_traced<F: FnMut(&[u8], f64)>(
    lattice: LlrLattice,
    spec: &CodeSpec,
    cfg: &FanoConfig,
    on_forward: F,
) -> Result<DecodeResult> {
    run(lattice, spec, cfg, on_forward)
}

/// Per-depth branch data: child metrics ordered best first.
#[derive(Clone, Copy, Default)]
struct Branches {
    count: u8,
    /// (path metric, v, u) for rank 0 and rank 1.
    child: [(f64, u8, u8); 2],
}

fn run<F: FnMut(&[u8], f64)>(
    mut lat: LlrLattice,
    spec: &CodeSpec,
    cfg: &FanoConfig,
    mut on_forward: F,
) -> Result<DecodeResult> {
    let n = spec.n();
    if lat.len() != n {
        return Err(Error::LengthMismatch { expected: n, actual: lat.len() });
    }
    if lat.cursor() != 1 {
        return Err(Error::Protocol("decoder needs a freshly initialized lattice".into()));
    }
    cfg.validate(n)?;
    let profile = spec.profile();
    let poly = spec.poly();
    let bias = cfg.bias.values();
    let delta = cfg.delta;

    let mut v = vec![0u8; n];
    let mut u = vec![0u8; n];
    let mut metric = vec![0.0f64; n + 1];
    let mut branches = vec![Branches::default(); n];
    let mut rank = vec![0u8; n];
    // threshold is t_steps · Δ, kept as an integer to avoid drift
    let mut t_steps: i64 = 0;
    let mut depth = 0usize;
    let mut visits = 0u64;
    // Nodes inside the leading all-frozen prefix have no alternatives above
    // them; the search treats the deepest such node as its root.
    let root = (1..=n).find(|&p| profile.is_info(p)).map_or(n, |p| p - 1);

    // Computes the children of the node at `depth` (position depth + 1).
    let expand = |lat: &mut LlrLattice, v: &mut [u8], depth: usize, parent: f64| -> Result<Branches> {
        let z = lat.soft_out()?.z;
        let b = bias[depth];
        let mut child = |bit: u8| {
            v[depth] = bit;
            let ub = poly.output_bit(v, depth);
            (parent + bit_metric(z, ub, b), bit, ub)
        };
        if profile.is_info(depth + 1) {
            let zero = child(0);
            let one = child(1);
            v[depth] = 0;
            let child = if one.0 > zero.0 { [one, zero] } else { [zero, one] };
            Ok(Branches { count: 2, child })
        } else {
            let zero = child(0);
            Ok(Branches { count: 1, child: [zero, zero] })
        }
    };

    if n > 0 {
        branches[0] = expand(&mut lat, &mut v, 0, 0.0)?;
    }
    let outcome = loop {
        if depth == n {
            break DecodeOutcome::Completed;
        }
        let threshold = t_steps as f64 * delta;
        let (m_child, v_child, u_child) = branches[depth].child[rank[depth] as usize];
        if m_child >= threshold {
            // forward move
            v[depth] = v_child;
            u[depth] = u_child;
            lat.advance(u_child)?;
            depth += 1;
            metric[depth] = m_child;
            visits += 1;
            on_forward(&v[..depth], threshold);
            if cfg.max_visits.is_some_and(|cap| visits > cap) {
                break DecodeOutcome::VisitBudgetExceeded;
            }
            if depth == n {
                break DecodeOutcome::Completed;
            }
            if metric[depth - 1] < threshold + delta {
                while metric[depth] >= (t_steps + 1) as f64 * delta {
                    t_steps += 1;
                }
            }
            rank[depth] = 0;
            branches[depth] = expand(&mut lat, &mut v, depth, metric[depth])?;
            continue;
        }
        // look back
        loop {
            let threshold = t_steps as f64 * delta;
            if depth <= root || metric[depth - 1] < threshold {
                t_steps -= 1;
                rank[depth] = 0;
                break;
            }
            depth -= 1;
            lat.retreat(depth + 1)?;
            if rank[depth] == 0 && branches[depth].count == 2 {
                rank[depth] = 1;
                break;
            }
        }
    };

    for i in depth..n {
        v[i] = 0;
        u[i] = 0;
    }
    if outcome == DecodeOutcome::VisitBudgetExceeded {
        // re-encode the partial estimate so that u_hat = conv(v_hat) still holds
        let vw = BitWord::from_bits(v.clone())?;
        u = crate::pretransform::conv_encode(&vw, poly).into_inner();
    }
    Ok(DecodeResult {
        v_hat: BitWord::from_bits(v)?,
        u_hat: BitWord::from_bits(u)?,
        visits,
        outcome,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{transmit, transmit_noiseless, Lineage};
    use crate::construction::{bias_vector, polar_profile, rm_profile, ChannelModel};
    use crate::pretransform::{ConnPoly, RateProfile};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn random_data(k: usize, rng: &mut ChaCha8Rng) -> BitWord {
        BitWord::from_bits((0..k).map(|_| rng.random_range(0..2u8)).collect()).unwrap()
    }

    #[test]
    fn metric_limits() {
        for u in [0, 1] {
            assert_eq!(bit_metric(0.0, u, 0.3), -0.3);
        }
        assert!((bit_metric(60.0, 0, 0.25) - 0.75).abs() < 1e-12);
        assert!(bit_metric(60.0, 1, 0.25) < -59.0);
        assert!((bit_metric(-60.0, 1, 0.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn anv_examples() {
        let r = DecodeResult {
            v_hat: BitWord::zeros(8),
            u_hat: BitWord::zeros(8),
            visits: 16,
            outcome: DecodeOutcome::Completed,
        };
        assert_eq!(anv(std::slice::from_ref(&r), 8).unwrap(), 2.0);
        assert!(anv(&[], 8).is_err());
    }

    #[test]
    fn noiseless_decodes_in_n_visits() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let poly: ConnPoly = "3211".parse().unwrap();
        for (n, k) in [(16, 8), (64, 22), (128, 64)] {
            let spec = CodeSpec::new(rm_profile(n, k).unwrap(), poly.clone()).unwrap();
            let cfg = FanoConfig::new(BiasVector::new(vec![0.5; n]).unwrap());
            for _ in 0..10 {
                let d = random_data(k, &mut rng);
                let (v, u, x) = spec.encode(&d).unwrap();
                let llrs = transmit_noiseless(&x, Lineage { seed: 0, frame: 0 }).llrs;
                let r = decode_llrs(&llrs, &spec, &cfg).unwrap();
                assert_eq!(r.v_hat, v);
                assert_eq!(r.u_hat, u);
                assert_eq!(r.visits, n as u64);
                assert_eq!(r.outcome, DecodeOutcome::Completed);
            }
        }
    }

    #[test]
    fn all_frozen_decodes_to_zero() {
        let spec = CodeSpec::new(RateProfile::all_frozen(32), "133".parse().unwrap()).unwrap();
        let cfg = FanoConfig::new(BiasVector::zeros(32));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let llrs: Vec<f64> = (0..32).map(|_| rng.random_range(-8.0..8.0)).collect();
            let r = decode_llrs(&llrs, &spec, &cfg).unwrap();
            assert_eq!(r.v_hat, BitWord::zeros(32));
            assert_eq!(r.visits, 32);
        }
    }

    #[test]
    fn identity_poly_follows_sc_on_correct_path() {
        // With g = 1 and noiseless input the decoder takes the SC hard decision at every step.
        let ch = ChannelModel::bec(0.3).unwrap();
        let profile = polar_profile(&ch, 32, 16, 0, 0).unwrap();
        let spec = CodeSpec::new(profile, ConnPoly::identity()).unwrap();
        let bias = bias_vector(&ch, 32, 0, 0).unwrap();
        let cfg = FanoConfig::new(bias);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = random_data(16, &mut rng);
        let (v, u, x) = spec.encode(&d).unwrap();
        assert_eq!(v, u);
        let llrs = transmit_noiseless(&x, Lineage { seed: 0, frame: 0 }).llrs;
        let r = decode_llrs(&llrs, &spec, &cfg).unwrap();
        assert_eq!(r.u_hat, u);
        assert_eq!(r.visits, 32);
    }

    #[test]
    fn budget_semantics() {
        let spec = CodeSpec::new(rm_profile(64, 42).unwrap(), "3211".parse().unwrap()).unwrap();
        let ch = ChannelModel::biawgn(0.3).unwrap();
        let cfg = FanoConfig::new(bias_vector(&ch, 64, 20_000, 1).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut hit = 0;
        for frame in 0..40 {
            let d = random_data(42, &mut rng);
            let (_, _, x) = spec.encode(&d).unwrap();
            let llrs = transmit(&x, 0.3, Lineage { seed: 4, frame }).unwrap().llrs;
            let free = decode_llrs(&llrs, &spec, &cfg).unwrap();
            for cap in [64u64, 100, 500] {
                let capped = cfg.clone().with_max_visits(Some(cap));
                let r = decode_llrs(&llrs, &spec, &capped).unwrap();
                assert_eq!(r.outcome == DecodeOutcome::VisitBudgetExceeded, free.visits > cap);
                assert!(r.visits <= cap + 1);
                assert_eq!(
                    r.u_hat,
                    crate::pretransform::conv_encode(&r.v_hat, spec.poly())
                );
                if r.outcome == DecodeOutcome::Completed {
                    assert_eq!(r, free);
                } else {
                    hit += 1;
                }
            }
        }
        assert!(hit > 0, "no frame exercised the budget");
    }

    #[test]
    fn threshold_discipline_and_determinism() {
        let spec = CodeSpec::new(rm_profile(32, 16).unwrap(), "133".parse().unwrap()).unwrap();
        let esn0 = 0.4;
        let ch = ChannelModel::biawgn(esn0).unwrap();
        let cfg = FanoConfig::new(bias_vector(&ch, 32, 20_000, 2).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut backtracked = 0;
        for frame in 0..200 {
            let d = random_data(16, &mut rng);
            let (_, _, x) = spec.encode(&d).unwrap();
            let llrs = transmit(&x, esn0, Lineage { seed: 5, frame }).unwrap().llrs;
            let mut seen = HashSet::new();
            let r = decode_traced(LlrLattice::init(&llrs).unwrap(), &spec, &cfg, |prefix, t| {
                assert!(
                    seen.insert((prefix.to_vec(), t.to_bits())),
                    "node {prefix:?} searched forward twice at threshold {t}"
                );
            })
            .unwrap();
            assert!(r.visits >= 32);
            if r.visits > 32 {
                backtracked += 1;
            }
            assert_eq!(r, decode_llrs(&llrs, &spec, &cfg).unwrap());
        }
        assert!(backtracked > 0);
    }

    #[test]
    fn rejects_bad_configuration() {
        let spec = CodeSpec::new(rm_profile(8, 4).unwrap(), ConnPoly::identity()).unwrap();
        let llrs = vec![1.0; 8];
        assert!(decode_llrs(&llrs, &spec, &FanoConfig::new(BiasVector::zeros(4))).is_err());
        let bad = FanoConfig::new(BiasVector::zeros(8)).with_delta(0.0);
        assert!(decode_llrs(&llrs, &spec, &bad).is_err());
        assert!(decode_llrs(&[1.0; 16], &spec, &FanoConfig::new(BiasVector::zeros(8))).is_err());
    }
}
