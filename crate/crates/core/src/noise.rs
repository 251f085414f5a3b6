//! Seeded samplers for every distribution the mechanisms need.
//!
//! Exponential quantities are parametrized by their *rate* `λ`: `Exp(λ)` has
//! CDF `1 - e^{-λx}` and mean `1/λ`.

use std::collections::HashSet;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

/// Deterministic random stream with labelled substreams.
///
/// A substream depends only on the parent's seed path and the label, never on
/// how many values the parent has produced, so adding draws in one stream
/// cannot shift another.
#[derive(Debug, Clone)]
pub struct RngStream {
    key: u64,
    rng: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::from_key(splitmix64(seed))
    }

    fn from_key(key: u64) -> Self {
        Self {
            key,
            rng: ChaCha8Rng::seed_from_u64(key),
        }
    }

    /// Independent child stream identified by `label`.
    pub fn substream(&self, label: &str) -> Self {
        Self::from_key(splitmix64(self.key ^ fnv1a(label.as_bytes()).rotate_left(17)))
    }

    /// Child stream identified by a label and an index, e.g. a repetition.
    pub fn substream_indexed(&self, label: &str, index: u64) -> Self {
        let child = self.substream(label);
        Self::from_key(splitmix64(child.key ^ splitmix64(index)))
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// A finite, strictly positive exponential rate.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Rate(f64);

impl Rate {
    pub fn new(rate: f64) -> Result<Self> {
        if rate.is_finite() && rate > 0.0 {
            Ok(Rate(rate))
        } else {
            Err(Error::param(format!("rate must be finite and > 0, got {rate}")))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

/// Uniform on `[0, 1)` with 53 random bits.
#[inline]
pub fn sample_uniform01(rng: &mut RngStream) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Inverse CDF of `Exp(rate)` at `u ∈ [0, 1)`.
#[inline]
pub fn exp_from_uniform(u: f64, rate: Rate) -> f64 {
    -(-u).ln_1p() / rate.0
}

pub fn sample_exp(rng: &mut RngStream, rate: Rate) -> f64 {
    exp_from_uniform(sample_uniform01(rng), rate)
}

/// Inverse CDF of the maximum of `k` i.i.d. `Exp(rate)` at `u ∈ [0, 1)`:
/// `-ln(1 - u^{1/k}) / rate`, evaluated through `expm1` so that large `k`
/// keeps its precision.
#[inline]
pub fn max_exp_from_uniform(u: f64, k: u64, rate: Rate) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    let one_minus_root = -(u.ln() / k as f64).exp_m1();
    -one_minus_root.ln() / rate.0
}

/// Maximum of `k` i.i.d. `Exp(rate)` draws using a single uniform.
pub fn sample_max_exp(rng: &mut RngStream, k: u64, rate: Rate) -> Result<f64> {
    if k == 0 {
        return Err(Error::param("max of zero exponentials"));
    }
    Ok(max_exp_from_uniform(sample_uniform01(rng), k, rate))
}

/// Exact `Binomial(trials, p)`.
///
/// Walks from success to success with geometric gaps, so the expected cost is
/// `O(trials * min(p, 1 - p) + 1)`.
pub fn sample_binomial(rng: &mut RngStream, trials: u64, p: f64) -> Result<u64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::param(format!("probability {p} outside [0, 1]")));
    }
    if p == 0.0 || trials == 0 {
        return Ok(0);
    }
    if p == 1.0 {
        return Ok(trials);
    }
    if p > 0.5 {
        return Ok(trials - skip_count(rng, trials, 1.0 - p));
    }
    Ok(skip_count(rng, trials, p))
}

fn skip_count(rng: &mut RngStream, trials: u64, p: f64) -> u64 {
    let log_q = (-p).ln_1p();
    let mut successes = 0u64;
    // Index of the next trial to be decided.
    let mut next = 0u64;
    loop {
        // failures before the next success ~ Geometric(p)
        let u = 1.0 - sample_uniform01(rng);
        let gap = (u.ln() / log_q).floor();
        if gap >= (trials - next) as f64 {
            return successes;
        }
        next += gap as u64 + 1;
        successes += 1;
        if next >= trials {
            return successes;
        }
    }
}

/// `N(0, sigma²)`.
pub fn sample_gaussian(rng: &mut RngStream, sigma: f64) -> Result<f64> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::param(format!("sigma must be > 0, got {sigma}")));
    }
    let z: f64 = StandardNormal.sample(rng);
    Ok(sigma * z)
}

/// Laplace with location 0 and the given scale, as a signed exponential.
pub fn sample_laplace(rng: &mut RngStream, scale: f64) -> Result<f64> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::param(format!("scale must be > 0, got {scale}")));
    }
    let magnitude = -(-sample_uniform01(rng)).ln_1p() * scale;
    Ok(if rng.next_u32() & 1 == 0 { magnitude } else { -magnitude })
}

/// Unbiased uniform index in `0..n`.
pub fn sample_uniform_index(rng: &mut RngStream, n: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::param("uniform index over an empty range"));
    }
    Ok(rng.random_range(0..n))
}

/// Uniform `k`-subset of `0..n`, returned in ascending order (Floyd's
/// algorithm, `O(k)` expected draws).
pub fn sample_distinct_indices(rng: &mut RngStream, n: usize, k: usize) -> Result<Vec<usize>> {
    if k > n {
        return Err(Error::param(format!("cannot pick {k} distinct values from {n}")));
    }
    let mut chosen = HashSet::with_capacity(k);
    for j in n - k..n {
        let t = rng.random_range(0..=j);
        if !chosen.insert(t) {
            chosen.insert(j);
        }
    }
    let mut out: Vec<usize> = chosen.into_iter().collect();
    out.sort_unstable();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use dpmst_stattest as st;

    fn rate(x: f64) -> Rate {
        Rate::new(x).unwrap()
    }

    #[test]
    fn rate_validation() {
        assert!(Rate::new(0.0).is_err());
        assert!(Rate::new(-1.0).is_err());
        assert!(Rate::new(f64::INFINITY).is_err());
        assert!(Rate::new(f64::NAN).is_err());
        assert_eq!(Rate::new(2.5).unwrap().get(), 2.5);
    }

    #[test]
    fn replay_and_substreams() {
        let mut a = RngStream::new(42);
        let mut b = RngStream::new(42);
        let va: Vec<f64> = (0..8).map(|_| sample_uniform01(&mut a)).collect();
        let vb: Vec<f64> = (0..8).map(|_| sample_uniform01(&mut b)).collect();
        assert_eq!(va, vb);

        // Substreams ignore the parent's position.
        let fresh = RngStream::new(42);
        let mut s1 = fresh.substream("x");
        let mut s2 = a.substream("x");
        assert_eq!(s1.next_u64(), s2.next_u64());
        let mut s3 = fresh.substream("y");
        let mut s4 = fresh.substream_indexed("x", 1);
        let x = fresh.substream("x").next_u64();
        assert_ne!(x, s3.next_u64());
        assert_ne!(x, s4.next_u64());
        assert_ne!(RngStream::new(1).next_u64(), RngStream::new(2).next_u64());
    }

    #[test]
    fn uniform01_moments_and_ks() {
        let mut rng = RngStream::new(1);
        let xs: Vec<f64> = (0..1_000_000).map(|_| sample_uniform01(&mut rng)).collect();
        assert!(xs.iter().all(|&x| (0.0..1.0).contains(&x)));
        assert!((st::mean(&xs) - 0.5).abs() < 0.002);
        assert!(st::ks_one_sample(&xs, |x| x.clamp(0.0, 1.0)).statistic < 0.002);
    }

    #[test]
    fn exp_inverse_transform() {
        let u = 1.0 - (-2.0f64).exp();
        assert!((exp_from_uniform(u, rate(1.0)) - 2.0).abs() < 1e-12);
        assert_eq!(exp_from_uniform(0.0, rate(1.0)), 0.0);
        assert!((exp_from_uniform(u, rate(4.0)) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn exp_mean() {
        let mut rng = RngStream::new(2);
        let xs: Vec<f64> = (0..1_000_000).map(|_| sample_exp(&mut rng, rate(1.0))).collect();
        assert!((st::mean(&xs) - 1.0).abs() < 0.005);
        assert!(xs.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn max_exp_inverse_transform() {
        let u = (1.0 - (-1.0f64).exp()).powi(4);
        assert!((max_exp_from_uniform(u, 4, rate(1.0)) - 1.0).abs() < 1e-12);
        assert_eq!(max_exp_from_uniform(0.0, 7, rate(1.0)), 0.0);
        // k = 1 coincides with the plain exponential transform.
        for u in [0.1, 0.5, 0.9, 0.999] {
            let a = max_exp_from_uniform(u, 1, rate(3.0));
            let b = exp_from_uniform(u, rate(3.0));
            assert!((a - b).abs() < 1e-12 * b.max(1.0));
        }
        let mut rng = RngStream::new(0);
        assert!(sample_max_exp(&mut rng, 0, rate(1.0)).is_err());
    }

    #[test]
    fn max_exp_one_matches_exp() {
        let mut a = RngStream::new(3);
        let mut b = RngStream::new(4);
        let xs: Vec<f64> = (0..100_000).map(|_| sample_max_exp(&mut a, 1, rate(1.0)).unwrap()).collect();
        let ys: Vec<f64> = (0..100_000).map(|_| sample_exp(&mut b, rate(1.0))).collect();
        assert!(st::ks_two_sample(&xs, &ys).p_value > 0.001);
    }

    #[test]
    fn max_exp_matches_closed_form_cdf() {
        let mut rng = RngStream::new(5);
        let xs: Vec<f64> = (0..100_000).map(|_| sample_max_exp(&mut rng, 1000, rate(1.0)).unwrap()).collect();
        let ks = st::ks_one_sample(&xs, |x| (1.0 - (-x).exp()).powi(1000));
        assert!(ks.statistic < 0.01, "{ks:?}");
    }

    #[test]
    fn max_exp_matches_explicit_maximum() {
        for (i, (k, r)) in [(2u64, 1.0), (10, 0.5), (100, 2.0)].into_iter().enumerate() {
            let mut a = RngStream::new(10 + i as u64);
            let mut b = RngStream::new(20 + i as u64);
            let fast: Vec<f64> = (0..100_000).map(|_| sample_max_exp(&mut a, k, rate(r)).unwrap()).collect();
            let slow: Vec<f64> = (0..100_000)
                .map(|_| (0..k).map(|_| sample_exp(&mut b, rate(r))).fold(0.0, f64::max))
                .collect();
            let ks = st::ks_two_sample(&fast, &slow);
            assert!(ks.p_value > 0.001, "k={k} rate={r}: {ks:?}");
        }
    }

    #[test]
    fn binomial_degenerate_and_invalid() {
        let mut rng = RngStream::new(6);
        for _ in 0..100 {
            assert_eq!(sample_binomial(&mut rng, 50, 0.0).unwrap(), 0);
            assert_eq!(sample_binomial(&mut rng, 50, 1.0).unwrap(), 50);
        }
        assert_eq!(sample_binomial(&mut rng, 0, 0.3).unwrap(), 0);
        assert!(sample_binomial(&mut rng, 5, 1.5).is_err());
        assert!(sample_binomial(&mut rng, 5, -0.1).is_err());
        assert!(sample_binomial(&mut rng, 5, f64::NAN).is_err());
    }

    #[test]
    fn binomial_rare_event_moments() {
        let mut rng = RngStream::new(7);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| sample_binomial(&mut rng, 1_000_000, 1e-5).unwrap() as f64)
            .collect();
        let (m, v) = (st::mean(&xs), st::variance(&xs));
        // Bin(10^6, 10^-5): mean 10, variance 10 * (1 - 10^-5).
        assert!((m - 10.0).abs() < 0.1, "mean {m}");
        assert!((v - 10.0).abs() < 1.0, "variance {v}");
    }

    #[test]
    fn binomial_matches_pmf() {
        for (i, (trials, p)) in [(20u64, 0.3), (40, 0.8), (1000, 0.004), (7, 0.5)].into_iter().enumerate() {
            let mut rng = RngStream::new(30 + i as u64);
            let mut hist = vec![0u64; trials as usize + 1];
            for _ in 0..100_000 {
                hist[sample_binomial(&mut rng, trials, p).unwrap() as usize] += 1;
            }
            let probs: Vec<f64> = (0..=trials).map(|k| st::binomial_pmf(trials, p, k)).collect();
            let chi = st::chi_square_gof(&hist, &probs);
            assert!(chi.p_value > 0.001, "Bin({trials},{p}): {chi:?}");
        }
    }

    #[test]
    fn gaussian_moments_and_ks() {
        let mut rng = RngStream::new(8);
        let xs: Vec<f64> = (0..1_000_000).map(|_| sample_gaussian(&mut rng, 1.0).unwrap()).collect();
        assert!(st::mean(&xs).abs() < 0.005);
        assert!((st::variance(&xs) - 1.0).abs() < 0.01);
        assert!(st::ks_one_sample(&xs, st::standard_normal_cdf).statistic < 0.002);
        assert!(sample_gaussian(&mut rng, 0.0).is_err());
        let mut a = RngStream::new(9);
        let mut b = RngStream::new(9);
        assert_eq!(sample_gaussian(&mut a, 2.0).unwrap(), sample_gaussian(&mut b, 2.0).unwrap());
    }

    #[test]
    fn laplace_moments() {
        let mut rng = RngStream::new(10);
        let xs: Vec<f64> = (0..1_000_000).map(|_| sample_laplace(&mut rng, 1.0).unwrap()).collect();
        assert!(st::mean(&xs).abs() < 0.01);
        assert!((st::variance(&xs) - 2.0).abs() < 0.04);
        assert!(st::median(&xs).abs() < 0.01);
        assert!(sample_laplace(&mut rng, -1.0).is_err());
        let mut a = RngStream::new(11);
        let mut b = RngStream::new(11);
        assert_eq!(sample_laplace(&mut a, 3.0).unwrap(), sample_laplace(&mut b, 3.0).unwrap());
    }

    #[test]
    fn uniform_index_is_unbiased() {
        let mut rng = RngStream::new(12);
        assert!(sample_uniform_index(&mut rng, 0).is_err());
        assert_eq!(sample_uniform_index(&mut rng, 1).unwrap(), 0);
        let mut hist = [0u64; 6];
        for _ in 0..600_000 {
            hist[sample_uniform_index(&mut rng, 6).unwrap()] += 1;
        }
        for c in hist {
            assert!((c as f64 - 100_000.0).abs() < 1000.0, "{hist:?}");
        }
        let mut a = RngStream::new(13);
        let mut b = RngStream::new(13);
        assert_eq!(sample_uniform_index(&mut a, 1000).unwrap(), sample_uniform_index(&mut b, 1000).unwrap());
    }

    #[test]
    fn distinct_indices_cases() {
        let mut rng = RngStream::new(14);
        assert!(sample_distinct_indices(&mut rng, 5, 0).unwrap().is_empty());
        assert_eq!(sample_distinct_indices(&mut rng, 5, 5).unwrap(), vec![0, 1, 2, 3, 4]);
        assert!(sample_distinct_indices(&mut rng, 3, 4).is_err());
        let mut pairs = std::collections::HashMap::new();
        for _ in 0..100_000 {
            let s = sample_distinct_indices(&mut rng, 5, 2).unwrap();
            assert_eq!(s.len(), 2);
            assert!(s[0] < s[1]);
            *pairs.entry((s[0], s[1])).or_insert(0u64) += 1;
        }
        assert_eq!(pairs.len(), 10);
        for (&pair, &c) in &pairs {
            assert!((c as f64 - 10_000.0).abs() < 300.0, "{pair:?}: {c}");
        }
    }
}
