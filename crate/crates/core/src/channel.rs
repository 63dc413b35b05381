//! BI-AWGN channel with BPSK, its information-theoretic constants and the
//! normal (dispersion) approximation of the achievable frame error rate.

use std::sync::OnceLock;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::demapper::LLR_CLAMP;
use crate::error::{Error, Result};
use crate::polar::BitWord;
use crate::rng::{stream, Purpose};

/// Starting Gauss–Hermite order for [`biawgn_constants`]. The order is doubled
/// until the constants move by less than [`QUADRATURE_TOL`].
pub const GAUSS_HERMITE_ORDER: usize = 63;
pub const QUADRATURE_TOL: f64 = 1e-10;
/// Number of doublings tried before giving up.
const MAX_DOUBLINGS: usize = 7;

/// Identity of one noise realization: `(run seed, frame index)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lineage {
    pub seed: u64,
    pub frame: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDraw {
    /// Base-2 LLRs of `x_i` given `y_i`.
    pub llrs: Vec<f64>,
    pub lineage: Lineage,
}

/// BPSK (0 → +1, 1 → −1) over AWGN with noise variance `1 / (2 Es/N0)`.
pub fn transmit(x: &BitWord, esn0: f64, lineage: Lineage) -> Result<ChannelDraw> {
    if esn0.is_infinite() && esn0 > 0.0 {
        return Ok(transmit_noiseless(x, lineage));
    }
    if esn0.is_nan() || esn0 <= 0.0 {
        return Err(Error::InvalidChannel(format!("Es/N0 must be positive, got {esn0}")));
    }
    let sigma = (0.5 / esn0).sqrt();
    let scale = 4.0 * esn0 * std::f64::consts::LOG2_E;
    let mut rng = stream(lineage.seed, Purpose::Noise, lineage.frame);
    let llrs = x
        .as_slice()
        .iter()
        .map(|&b| {
            let s = if b == 0 { 1.0 } else { -1.0 };
            let noise: f64 = StandardNormal.sample(&mut rng);
            scale * (s + sigma * noise)
        })
        .collect();
    Ok(ChannelDraw { llrs, lineage })
}

/// Saturated LLRs carrying the transmitted bits exactly.
pub fn transmit_noiseless(x: &BitWord, lineage: Lineage) -> ChannelDraw {
    let llrs = x
        .as_slice()
        .iter()
        .map(|&b| if b == 0 { LLR_CLAMP } else { -LLR_CLAMP })
        .collect();
    ChannelDraw { llrs, lineage }
}

/// Linear `Es/N0 = R 10^{Eb/N0 [dB] / 10}`.
pub fn ebn0_to_esn0(ebn0_db: f64, rate: f64) -> Result<f64> {
    if rate.is_nan() || rate <= 0.0 {
        return Err(Error::InvalidConfig(format!("rate must be positive, got {rate}")));
    }
    Ok(rate * 10f64.powf(ebn0_db / 10.0))
}

/// Capacity, dispersion and cutoff rate of BI-AWGN at a given `Es/N0`, all in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiAwgnConstants {
    pub capacity: f64,
    pub dispersion: f64,
    pub cutoff_rate: f64,
}

/// Gauss–Hermite nodes and weights for `∫ e^{-t²} f(t) dt` by Golub–Welsch:
/// eigenvalues of the Jacobi matrix (zero diagonal, off-diagonal `sqrt(k/2)`)
/// via implicit QL, tracking only the first eigenvector components.
fn gauss_hermite(order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = order;
    let mut d = vec![0.0f64; n];
    let mut e: Vec<f64> = (0..n).map(|i| if i + 1 < n { ((i + 1) as f64 / 2.0).sqrt() } else { 0.0 }).collect();
    let mut z = vec![0.0f64; n];
    z[0] = 1.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Numeric(format!("QL iteration stalled for order {order}")));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0f64, 1.0f64, 0.0f64);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    let mut pairs: Vec<(f64, f64)> = d
        .into_iter()
        .zip(z)
        .map(|(x, v)| (x, std::f64::consts::PI.sqrt() * v * v))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs.into_iter().unzip())
}

/// Cached rule of order `GAUSS_HERMITE_ORDER · 2^doublings`.
fn rule(doublings: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static RULES: [OnceLock<(Vec<f64>, Vec<f64>)>; MAX_DOUBLINGS + 1] =
        [const { OnceLock::new() }; MAX_DOUBLINGS + 1];
    RULES[doublings].get_or_init(|| {
        gauss_hermite(GAUSS_HERMITE_ORDER << doublings).expect("Jacobi eigenproblem converges")
    })
}

/// Mean and variance of the information density `1 - log2(1 + e^{-L})`,
/// `L ~ N(4 Es/N0, 8 Es/N0)`.
fn density_moments(esn0: f64, doublings: usize) -> (f64, f64) {
    let (nodes, weights) = rule(doublings);
    let mean = 4.0 * esn0;
    let sd = (8.0 * esn0).sqrt();
    let (mut m1, mut m2) = (0.0, 0.0);
    for (&t, &w) in nodes.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        let l = mean + std::f64::consts::SQRT_2 * sd * t;
        let i = 1.0 - crate::demapper::softplus2(-l * std::f64::consts::LOG2_E);
        m1 += w * i;
        m2 += w * i * i;
    }
    let norm = std::f64::consts::PI.sqrt();
    let (m1, m2) = (m1 / norm, m2 / norm);
    (m1, (m2 - m1 * m1).max(0.0))
}

/// Quadrature order actually used at `esn0` and the resulting `(C, V)`.
fn converged_moments(esn0: f64) -> Result<(usize, f64, f64)> {
    let (mut c, mut v) = density_moments(esn0, 0);
    for d in 1..=MAX_DOUBLINGS {
        let (c2, v2) = density_moments(esn0, d);
        if (c2 - c).abs() < QUADRATURE_TOL && (v2 - v).abs() < QUADRATURE_TOL {
            return Ok((GAUSS_HERMITE_ORDER << d, c2, v2));
        }
        (c, v) = (c2, v2);
    }
    Err(Error::Numeric(format!(
        "Gauss-Hermite not converged at Es/N0={esn0} with {} nodes (C={c}, V={v})",
        GAUSS_HERMITE_ORDER << MAX_DOUBLINGS
    )))
}

pub fn biawgn_constants(esn0: f64) -> Result<BiAwgnConstants> {
    if !esn0.is_finite() || esn0 <= 0.0 {
        return Err(Error::InvalidChannel(format!("Es/N0 must be positive and finite, got {esn0}")));
    }
    let (_, c, v) = converged_moments(esn0)?;
    Ok(BiAwgnConstants {
        capacity: c,
        dispersion: v,
        cutoff_rate: 1.0 - (-esn0).exp().ln_1p() * std::f64::consts::LOG2_E,
    })
}

/// Gaussian tail `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(x / std::f64::consts::SQRT_2)
}

/// Normal approximation with the `½ log2 N` refinement:
/// `Q((N C − K + ½ log2 N) / sqrt(N V))`.
pub fn dispersion_fer(n: usize, k: usize, esn0: f64) -> Result<f64> {
    if k == 0 || k > n {
        return Err(Error::InvalidConfig(format!("need 1 <= K <= N, got N={n} K={k}")));
    }
    let consts = biawgn_constants(esn0)?;
    let nf = n as f64;
    let num = nf * consts.capacity - k as f64 + 0.5 * nf.log2();
    let den = (nf * consts.dispersion).sqrt();
    if den == 0.0 {
        return Ok(if num > 0.0 { 0.0 } else if num < 0.0 { 1.0 } else { 0.5 });
    }
    Ok(q_function(num / den))
}

/// Description recorded next to every reference curve.
pub const NORMAL_APPROXIMATION_VARIANT: &str = "Q((N*C - K + 0.5*log2 N) / sqrt(N*V))";
