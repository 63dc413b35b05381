//! Backtrackable polar demapper.
//!
//! Produces the soft output `z_i = log2 P(y, û^{i-1} | u_i = 0) / P(y, û^{i-1} | u_i = 1)`
//! for the sequential decoder. All intermediate LLRs are kept in an
//! `N (log2 N + 1)` lattice so that moving the cursor backwards only
//! invalidates the part of the tree below the common ancestor of the old
//! and new leaves; nothing is recomputed eagerly.
//!
//! Layout: level `s` holds `N / 2^s` segments of length `2^s`. Level
//! `log2 N` is the channel, level 0 the leaves. Segment `k` of level `s`
//! covers leaves `[k 2^s, (k+1) 2^s)`.

use crate::error::{Error, Result};
use crate::polar::log2_exact;

/// Saturation magnitude for base-2 LLRs.
pub const LLR_CLAMP: f64 = 60.0;

const INVALID: usize = usize::MAX;

#[inline]
fn clamp(x: f64) -> f64 {
    x.clamp(-LLR_CLAMP, LLR_CLAMP)
}

/// `log2(1 + 2^x)` without overflow.
#[inline]
pub(crate) fn softplus2(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp2().ln_1p() * std::f64::consts::LOG2_E
    } else {
        x.exp2().ln_1p() * std::f64::consts::LOG2_E
    }
}

/// Check-node combination in base 2: `log2((1 + 2^{a+b}) / (2^a + 2^b))`.
#[inline]
pub fn boxplus2(a: f64, b: f64) -> f64 {
    let hard = a.signum() * b.signum() * a.abs().min(b.abs());
    hard + softplus2(-(a + b).abs()) - softplus2(-(a - b).abs())
}

/// Variable-node combination: `b + (-1)^u a`, saturated.
#[inline]
pub fn g_step(a: f64, b: f64, u: u8) -> f64 {
    clamp(if u == 0 { b + a } else { b - a })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftOut {
    pub z: f64,
}

#[derive(Debug, Clone)]
pub struct LlrLattice {
    n: usize,
    log_n: usize,
    llr: Vec<f64>,
    psum: Vec<u8>,
    /// Per level, the segment whose LLRs are valid for the current prefix.
    valid: Vec<usize>,
    decisions: Vec<u8>,
    /// 0-based index of the next leaf.
    cursor: usize,
}

impl LlrLattice {
    /// Loads base-2 channel LLRs (saturated to ±60) and places the cursor at leaf 1.
    pub fn init(channel_llrs: &[f64]) -> Result<Self> {
        let n = channel_llrs.len();
        let log_n = log2_exact(n)? as usize;
        let mut llr = vec![0.0; n * (log_n + 1)];
        for (dst, &src) in llr[log_n * n..].iter_mut().zip(channel_llrs) {
            *dst = clamp(src);
        }
        let mut valid = vec![INVALID; log_n + 1];
        valid[log_n] = 0;
        Ok(LlrLattice {
            n,
            log_n,
            llr,
            psum: vec![0; n * (log_n + 1)],
            valid,
            decisions: vec![0; n],
            cursor: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// 1-based index of the leaf whose soft output is next (N + 1 when done).
    pub fn cursor(&self) -> usize {
        self.cursor + 1
    }

    /// Hard decisions delivered so far.
    pub fn decisions(&self) -> &[u8] {
        &self.decisions[..self.cursor]
    }

    pub fn channel_llrs(&self) -> &[f64] {
        &self.llr[self.log_n * self.n..]
    }

    /// Number of soft values held; fixed at `N (log2 N + 1)`.
    pub fn soft_storage_len(&self) -> usize {
        self.llr.len()
    }

    pub fn soft_out(&mut self) -> Result<SoftOut> {
        let c = self.cursor;
        if c >= self.n {
            return Err(Error::Protocol(format!(
                "soft output requested at leaf {} of a length-{} block",
                c + 1,
                self.n
            )));
        }
        let n = self.n;
        let mut top = 0;
        while self.valid[top] != c >> top {
            top += 1;
        }
        for t in (0..top).rev() {
            let k = c >> t;
            let len = 1usize << t;
            let parent = (t + 1) * n + ((k >> 1) << (t + 1));
            let base = t * n + (k << t);
            if k & 1 == 0 {
                for i in 0..len {
                    self.llr[base + i] =
                        boxplus2(self.llr[parent + i], self.llr[parent + len + i]);
                }
            } else {
                let sibling = t * n + ((k - 1) << t);
                for i in 0..len {
                    self.llr[base + i] = g_step(
                        self.llr[parent + i],
                        self.llr[parent + len + i],
                        self.psum[sibling + i],
                    );
                }
            }
            self.valid[t] = k;
        }
        Ok(SoftOut { z: self.llr[c] })
    }

    /// Delivers the hard decision `û_i` for the current leaf and moves to leaf `i + 1`.
    pub fn advance(&mut self, u_hat: u8) -> Result<()> {
        let c = self.cursor;
        if c >= self.n {
            return Err(Error::Protocol("advance past the last leaf".into()));
        }
        if u_hat > 1 {
            return Err(Error::InvalidBit(u_hat));
        }
        let n = self.n;
        self.decisions[c] = u_hat;
        self.psum[c] = u_hat;
        let mut t = 0;
        while t < self.log_n && (c >> t) & 1 == 1 {
            let k = c >> t;
            let len = 1usize << t;
            let left = t * n + ((k - 1) << t);
            let right = t * n + (k << t);
            let parent = (t + 1) * n + ((k - 1) << t);
            for i in 0..len {
                let (a, b) = (self.psum[left + i], self.psum[right + i]);
                self.psum[parent + i] = a ^ b;
                self.psum[parent + len + i] = b;
            }
            t += 1;
        }
        self.cursor += 1;
        Ok(())
    }

    /// Moves the cursor back to the 1-based leaf `target`, discarding decisions from
    /// `target` on. Segments that start after the new cursor are invalidated.
    pub fn retreat(&mut self, target: usize) -> Result<()> {
        if target == 0 || target > self.cursor + 1 {
            return Err(Error::Protocol(format!(
                "retreat to leaf {target} with cursor at {}",
                self.cursor + 1
            )));
        }
        let c = target - 1;
        for (t, v) in self.valid.iter_mut().enumerate() {
            if *v != INVALID && *v > c >> t {
                *v = INVALID;
            }
        }
        self.cursor = c;
        Ok(())
    }
}
