//! Guessing bounds (Massey, Arıkan), an exhaustive guessing oracle, and
//! cutoff rates of finite channels.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TOL: f64 = 1e-9;

/// Joint law of `(X, Y)` given as a prior on `X ∈ {1..M}` and a channel `P(y|x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteJointDist {
    prior: Vec<f64>,
    /// `channel[x][y] = P(y | x)`.
    channel: Vec<Vec<f64>>,
}

fn check_simplex(p: &[f64], what: &str) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidDistribution(format!("{what} is empty")));
    }
    if let Some(v) = p.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidDistribution(format!("{what} has entry {v}")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > TOL {
        return Err(Error::InvalidDistribution(format!("{what} sums to {s}")));
    }
    Ok(())
}

impl FiniteJointDist {
    pub fn new(prior: Vec<f64>, channel: Vec<Vec<f64>>) -> Result<Self> {
        check_simplex(&prior, "prior")?;
        if channel.len() != prior.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} channel rows for {} inputs",
                channel.len(),
                prior.len()
            )));
        }
        let ny = channel[0].len();
        for (x, row) in channel.iter().enumerate() {
            if row.len() != ny {
                return Err(Error::InvalidDistribution("ragged channel matrix".into()));
            }
            check_simplex(row, &format!("row {}", x + 1))?;
        }
        Ok(FiniteJointDist { prior, channel })
    }

    /// `X` uniform over `m`, `Y` a constant.
    pub fn uniform_independent(m: usize) -> Result<Self> {
        Self::new(vec![1.0 / m as f64; m], vec![vec![1.0]; m])
    }

    /// Random prior and channel (Dirichlet(1) rows via normalized exponentials).
    pub fn random<R: Rng + ?Sized>(m: usize, ny: usize, rng: &mut R) -> Self {
        let mut simplex = |len: usize| {
            let raw: Vec<f64> = (0..len).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / s).collect::<Vec<_>>()
        };
        let prior = simplex(m);
        let channel = (0..m).map(|_| simplex(ny)).collect();
        FiniteJointDist { prior, channel }
    }

    /// Random prior, `Y` independent of `X`.
    pub fn random_independent<R: Rng + ?Sized>(m: usize, ny: usize, rng: &mut R) -> Self {
        let mut d = Self::random(m, ny, rng);
        let row = d.channel[0].clone();
        d.channel.iter_mut().for_each(|r| r.clone_from(&row));
        d
    }

    pub fn inputs(&self) -> usize {
        self.prior.len()
    }

    pub fn outputs(&self) -> usize {
        self.channel[0].len()
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    /// `P(y | x)` with 0-based indices.
    pub fn conditional(&self, x: usize, y: usize) -> f64 {
        self.channel[x][y]
    }

    pub fn joint(&self, x: usize, y: usize) -> f64 {
        self.prior[x] * self.channel[x][y]
    }

    /// `H(X)` in bits.
    pub fn entropy_x(&self) -> f64 {
        -self.prior.iter().filter(|&&p| p > 0.0).map(|&p| p * p.log2()).sum::<f64>()
    }

    /// Joint law of two independent uses, input `(x1, x2) → (x1 - 1) M2 + x2`.
    pub fn product(&self, other: &FiniteJointDist) -> FiniteJointDist {
        let mut prior = Vec::with_capacity(self.inputs() * other.inputs());
        let mut channel = Vec::with_capacity(prior.capacity());
        for x1 in 0..self.inputs() {
            for x2 in 0..other.inputs() {
                prior.push(self.prior[x1] * other.prior[x2]);
                let mut row = Vec::with_capacity(self.outputs() * other.outputs());
                for y1 in 0..self.outputs() {
                    for y2 in 0..other.outputs() {
                        row.push(self.channel[x1][y1] * other.channel[x2][y2]);
                    }
                }
                channel.push(row);
            }
        }
        FiniteJointDist { prior, channel }
    }
}

/// `E[G(X|Y)]` under the optimal order: for each `y`, guess inputs by
/// decreasing posterior, ties by input index.
pub fn expected_guesses(d: &FiniteJointDist) -> f64 {
    let mut order: Vec<usize> = (0..d.inputs()).collect();
    (0..d.outputs())
        .map(|y| {
            order.sort_by(|&a, &b| d.joint(b, y).total_cmp(&d.joint(a, y)).then(a.cmp(&b)));
            order.iter().enumerate().map(|(k, &x)| (k + 1) as f64 * d.joint(x, y)).sum::<f64>()
        })
        .sum()
}

/// Massey's bound `2^H / 4 + 1`, valid for `H ≥ 2` bits.
pub fn massey_lower_bound(entropy_bits: f64) -> Result<f64> {
    if entropy_bits.is_nan() || entropy_bits < 2.0 {
        return Err(Error::Domain(format!("Massey bound needs H >= 2, got {entropy_bits}")));
    }
    Ok(entropy_bits.exp2() / 4.0 + 1.0)
}

/// Arıkan's bounds `(upper / (1 + ln M), upper)` with `upper = Σ_y (Σ_x sqrt P(x,y))²`.
pub fn arikan_bounds(d: &FiniteJointDist) -> (f64, f64) {
    let upper: f64 = (0..d.outputs())
        .map(|y| (0..d.inputs()).map(|x| d.joint(x, y).sqrt()).sum::<f64>().powi(2))
        .sum();
    (upper / (1.0 + (d.inputs() as f64).ln()), upper)
}

/// `e^{N (R - R0)}` with `R`, `R0` in bits per use (converted to nats here).
pub fn guess_lower_bound(n: usize, rate_bits: f64, r0_bits: f64) -> f64 {
    (n as f64 * (rate_bits - r0_bits) * std::f64::consts::LN_2).exp()
}

/// Largest information count a node of `n_bits` uses can carry: `floor(n r0 + ε)`.
pub fn rate_cap(n_bits: usize, r0: f64, eps: f64) -> usize {
    (n_bits as f64 * r0 + eps).floor().max(0.0) as usize
}

/// Cutoff rate of the channel under its prior, in bits:
/// `-log2 Σ_y (Σ_x P(x) sqrt P(y|x))²`.
pub fn cutoff_rate(d: &FiniteJointDist) -> f64 {
    let s: f64 = (0..d.outputs())
        .map(|y| {
            (0..d.inputs())
                .map(|x| d.prior[x] * d.conditional(x, y).sqrt())
                .sum::<f64>()
                .powi(2)
        })
        .sum();
    -s.log2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn identity(m: usize) -> FiniteJointDist {
        let channel = (0..m).map(|x| (0..m).map(|y| f64::from(u8::from(x == y))).collect()).collect();
        FiniteJointDist::new(vec![1.0 / m as f64; m], channel).unwrap()
    }

    /// Brute force over every guessing order for each y; the optimum must match.
    fn best_over_permutations(d: &FiniteJointDist) -> f64 {
        fn perms(items: Vec<usize>) -> Vec<Vec<usize>> {
            if items.len() <= 1 {
                return vec![items];
            }
            let mut out = Vec::new();
            for i in 0..items.len() {
                let mut rest = items.clone();
                let head = rest.remove(i);
                for mut p in perms(rest) {
                    p.insert(0, head);
                    out.push(p);
                }
            }
            out
        }
        let all = perms((0..d.inputs()).collect());
        (0..d.outputs())
            .map(|y| {
                all.iter()
                    .map(|p| p.iter().enumerate().map(|(k, &x)| (k + 1) as f64 * d.joint(x, y)).sum::<f64>())
                    .fold(f64::INFINITY, f64::min)
            })
            .sum()
    }

    #[test]
    fn guessing_examples() {
        assert_eq!(expected_guesses(&identity(5)), 1.0);
        assert_eq!(expected_guesses(&FiniteJointDist::uniform_independent(4).unwrap()), 2.5);
        for m in [1, 2, 7, 16] {
            let e = expected_guesses(&FiniteJointDist::uniform_independent(m).unwrap());
            assert!((e - (m as f64 + 1.0) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn massey_examples() {
        assert_eq!(massey_lower_bound(2.0).unwrap(), 2.0);
        assert_eq!(massey_lower_bound(3.0).unwrap(), 3.0);
        assert!(massey_lower_bound(1.5).is_err());
        let u8d = FiniteJointDist::uniform_independent(8).unwrap();
        assert!((u8d.entropy_x() - 3.0).abs() < 1e-12);
        assert!(expected_guesses(&u8d) >= massey_lower_bound(u8d.entropy_x()).unwrap());
    }

    #[test]
    fn arikan_examples() {
        let one = FiniteJointDist::uniform_independent(1).unwrap();
        assert_eq!(arikan_bounds(&one), (1.0, 1.0));
        assert_eq!(expected_guesses(&one), 1.0);
        for m in [2usize, 4, 8] {
            let d = FiniteJointDist::uniform_independent(m).unwrap();
            let (lo, hi) = arikan_bounds(&d);
            // upper = (Σ sqrt(1/m))² = m
            assert!((hi - m as f64).abs() < 1e-12);
            let e = (m as f64 + 1.0) / 2.0;
            assert!(lo <= e && e <= hi);
        }
    }

    #[test]
    fn validation() {
        assert!(FiniteJointDist::new(vec![0.5, 0.4], vec![vec![1.0], vec![1.0]]).is_err());
        assert!(FiniteJointDist::new(vec![0.5, 0.5], vec![vec![1.0]]).is_err());
        assert!(FiniteJointDist::new(vec![1.0], vec![vec![0.5, 0.6]]).is_err());
        assert!(FiniteJointDist::new(vec![1.5, -0.5], vec![vec![1.0], vec![1.0]]).is_err());
        assert!(FiniteJointDist::new(vec![], vec![]).is_err());
    }

    #[test]
    fn guess_bound_and_caps() {
        assert_eq!(guess_lower_bound(100, 0.4, 0.4), 1.0);
        assert!(guess_lower_bound(100, 0.3, 0.4) < 1.0);
        assert!((guess_lower_bound(10, 0.6, 0.5) - 2.0).abs() < 1e-12);
        assert_eq!(rate_cap(256, 0.3564, 0.1), 91);
        assert_eq!(rate_cap(77, 0.0, 0.9), 0);
    }

    #[test]
    fn bsc_cutoff_rate_closed_form() {
        let p: f64 = 0.11;
        let d = FiniteJointDist::new(vec![0.5, 0.5], vec![vec![1.0 - p, p], vec![p, 1.0 - p]]).unwrap();
        let z = 2.0 * (p * (1.0 - p)).sqrt();
        assert!((cutoff_rate(&d) - (1.0 - (1.0 + z).log2())).abs() < 1e-12);
    }

    #[test]
    fn cutoff_rate_additive_over_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let a = FiniteJointDist::random(3, 4, &mut rng);
            let b = FiniteJointDist::random(2, 5, &mut rng);
            let ab = a.product(&b);
            assert!((cutoff_rate(&ab) - cutoff_rate(&a) - cutoff_rate(&b)).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn sandwich(m in 1usize..=16, ny in 1usize..=16, seed in any::<u64>()) {
            let d = FiniteJointDist::random(m, ny, &mut ChaCha8Rng::seed_from_u64(seed));
            let (lo, hi) = arikan_bounds(&d);
            let e = expected_guesses(&d);
            prop_assert!(lo <= e + 1e-9 && e <= hi + 1e-9, "{} {} {}", lo, e, hi);
        }

        #[test]
        fn oracle_is_optimal(m in 1usize..=5, ny in 1usize..=4, seed in any::<u64>()) {
            let d = FiniteJointDist::random(m, ny, &mut ChaCha8Rng::seed_from_u64(seed));
            prop_assert!((expected_guesses(&d) - best_over_permutations(&d)).abs() < 1e-12);
        }

        #[test]
        fn massey_for_independent(m in 4usize..=64, ny in 1usize..=8, seed in any::<u64>()) {
            let d = FiniteJointDist::random_independent(m, ny, &mut ChaCha8Rng::seed_from_u64(seed));
            let h = d.entropy_x();
            if h >= 2.0 {
                prop_assert!(expected_guesses(&d) + 1e-9 >= massey_lower_bound(h).unwrap());
            }
        }
    }
}
