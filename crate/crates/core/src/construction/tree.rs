use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bhattacharyya_base, cutoff_from_z, ChannelModel};
use crate::demapper::{boxplus2, g_step, LLR_CLAMP};
use crate::error::{Error, Result};
use crate::polar::log2_exact;
use crate::rng::{stream, Purpose};

/// Samples per parallel work unit. Fixed so the result is independent of the pool size.
const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeEstimate {
    /// First covered position (1-based).
    pub start: usize,
    pub len: usize,
    pub z: f64,
    /// Standard error of `z` (0 for exact values).
    pub z_se: f64,
    pub r0: f64,
    pub r0_se: f64,
    /// `floor(len · r0 + ε)`.
    pub cap: usize,
}

impl NodeEstimate {
    fn new(start: usize, len: usize, z: f64, z_se: f64, eps: f64) -> Result<Self> {
        let z = z.clamp(0.0, 1.0);
        let r0 = cutoff_from_z(z)?;
        let r0_se = z_se / ((1.0 + z) * std::f64::consts::LN_2);
        let cap = ((len as f64 * r0 + eps).floor().max(0.0) as usize).min(len);
        Ok(NodeEstimate { start, len, z, z_se, r0, r0_se, cap })
    }

    /// Last covered position (1-based, inclusive).
    pub fn end(&self) -> usize {
        self.start + self.len - 1
    }
}

/// Node estimates of the polarization tree, levels `0..=depth`.
/// Level `s` has `2^s` nodes in natural position order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeCutoffTree {
    pub n: usize,
    pub epsilon: f64,
    pub channel: ChannelModel,
    pub mc_samples: usize,
    pub seed: u64,
    levels: Vec<Vec<NodeEstimate>>,
}

impl NodeCutoffTree {
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, s: usize) -> &[NodeEstimate] {
        &self.levels[s]
    }

    pub fn caps(&self, s: usize) -> Vec<usize> {
        self.levels[s].iter().map(|e| e.cap).collect()
    }

    /// Level-`s` node covering the 1-based position `pos`.
    pub fn node_of(&self, s: usize, pos: usize) -> &NodeEstimate {
        &self.levels[s][(pos - 1) / (self.n >> s)]
    }
}

/// Node cutoff tree down to `levels`. BEC trees use the exact recursion,
/// BI-AWGN trees Monte-Carlo density evolution with `mc_samples` samples.
pub fn node_cutoff_tree(
    ch: &ChannelModel,
    n: usize,
    levels: usize,
    eps: f64,
    mc_samples: usize,
    seed: u64,
) -> Result<NodeCutoffTree> {
    build(ch, n, levels, eps, mc_samples, seed, false)
}

/// Like [`node_cutoff_tree`] but always sampled, also for the BEC.
pub fn node_cutoff_tree_sampled(
    ch: &ChannelModel,
    n: usize,
    levels: usize,
    eps: f64,
    mc_samples: usize,
    seed: u64,
) -> Result<NodeCutoffTree> {
    build(ch, n, levels, eps, mc_samples, seed, true)
}

fn build(
    ch: &ChannelModel,
    n: usize,
    levels: usize,
    eps: f64,
    mc_samples: usize,
    seed: u64,
    force_mc: bool,
) -> Result<NodeCutoffTree> {
    ch.validate()?;
    let m = log2_exact(n)? as usize;
    if levels > m {
        return Err(Error::InvalidConfig(format!("level {levels} exceeds log2 N = {m}")));
    }
    let exact = matches!(ch, ChannelModel::Bec { .. }) && !force_mc;
    if !exact && mc_samples == 0 {
        return Err(Error::InvalidConfig("mc_samples must be positive".into()));
    }
    let z: Vec<Vec<(f64, f64)>> = if exact {
        bec_exact(bhattacharyya_base(ch), levels)
    } else {
        let mut z = sample(ch, levels, mc_samples, seed);
        if let ChannelModel::BiAwgn { .. } = ch {
            z[0][0] = (bhattacharyya_base(ch), 0.0);
        }
        z
    };
    let levels = z
        .iter()
        .enumerate()
        .map(|(s, row)| {
            let len = n >> s;
            row.iter()
                .enumerate()
                .map(|(j, &(z, se))| NodeEstimate::new(j * len + 1, len, z, se, eps))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NodeCutoffTree { n, epsilon: eps, channel: *ch, mc_samples, seed, levels })
}

fn bec_exact(z0: f64, levels: usize) -> Vec<Vec<(f64, f64)>> {
    let mut out = vec![vec![(z0, 0.0)]];
    for _ in 0..levels {
        let next = out
            .last()
            .unwrap()
            .iter()
            .flat_map(|&(z, _)| [(2.0 * z - z * z, 0.0), (z * z, 0.0)])
            .collect();
        out.push(next);
    }
    out
}

/// Per-node sums of per-sample Bhattacharyya averages and their squares.
struct Moments {
    s1: Vec<f64>,
    s2: Vec<f64>,
}

/// Density evolution under the all-zero codeword with genie partial sums.
/// One sample is a block of `2^levels` base LLRs; a level-`s` node sees
/// `2^(levels-s)` independent realizations per sample, which are averaged.
fn sample(ch: &ChannelModel, levels: usize, samples: usize, seed: u64) -> Vec<Vec<(f64, f64)>> {
    let width = 1usize << levels;
    let nodes = 2 * width - 1;
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK.min(samples - c * CHUNK);
            let mut rng = stream(seed, Purpose::Construction, c as u64);
            let mut mom = Moments { s1: vec![0.0; nodes], s2: vec![0.0; nodes] };
            // level s occupies buf[s*width..(s+1)*width]; node j of width w at [j*w..(j+1)*w]
            let mut buf = vec![0.0f64; width * (levels + 1)];
            for _ in 0..count {
                for llr in &mut buf[..width] {
                    *llr = base_llr(ch, &mut rng);
                }
                for s in 0..=levels {
                    let w = width >> s;
                    if s > 0 {
                        let (prev, cur) = buf.split_at_mut(s * width);
                        let prev = &prev[(s - 1) * width..];
                        let h = w;
                        for j in 0..(1usize << (s - 1)) {
                            let parent = &prev[j * 2 * h..(j + 1) * 2 * h];
                            let (a, b) = parent.split_at(h);
                            for t in 0..h {
                                cur[2 * j * h + t] = boxplus2(a[t], b[t]);
                                cur[(2 * j + 1) * h + t] = g_step(a[t], b[t], 0);
                            }
                        }
                    }
                    let level = &buf[s * width..(s + 1) * width];
                    let first = (1usize << s) - 1;
                    for j in 0..(1usize << s) {
                        let mean = level[j * w..(j + 1) * w]
                            .iter()
                            .map(|&z| (-0.5 * z).exp2())
                            .sum::<f64>()
                            / w as f64;
                        mom.s1[first + j] += mean;
                        mom.s2[first + j] += mean * mean;
                    }
                }
            }
            mom
        })
        .collect();
    let mut s1 = vec![0.0; nodes];
    let mut s2 = vec![0.0; nodes];
    for p in &parts {
        for i in 0..nodes {
            s1[i] += p.s1[i];
            s2[i] += p.s2[i];
        }
    }
    let nf = samples as f64;
    (0..=levels)
        .map(|s| {
            let first = (1usize << s) - 1;
            (0..(1usize << s))
                .map(|j| {
                    let mean = s1[first + j] / nf;
                    let var = (s2[first + j] / nf - mean * mean).max(0.0);
                    (mean, (var / nf).sqrt())
                })
                .collect()
        })
        .collect()
}

fn base_llr<R: rand::Rng>(ch: &ChannelModel, rng: &mut R) -> f64 {
    match *ch {
        ChannelModel::BiAwgn { esn0 } => {
            let noise: f64 = StandardNormal.sample(rng);
            let natural = 4.0 * esn0 + (8.0 * esn0).sqrt() * noise;
            (natural * std::f64::consts::LOG2_E).clamp(-LLR_CLAMP, LLR_CLAMP)
        }
        ChannelModel::Bec { erasure } => {
            if rng.random::<f64>() < erasure {
                0.0
            } else {
                LLR_CLAMP
            }
        }
    }
}
