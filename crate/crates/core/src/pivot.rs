//! Subsample sizes, the law of the pivot rank, and comparison-counted median
//! selection inside the subsample.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rand_distr::{Beta, Binomial, Distribution};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Largest `n` for which [`SplitLaw::pmf`] goes through exact rationals.
pub const EXACT_PMF_MAX_N: u64 = 60;

/// Default threshold below which the subsample size is forced to 1.
pub const DEFAULT_FLOOR_N0: u64 = 5;

/// Subsample size rule `k(n) ~ c n^alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsampleRule {
    pub c: f64,
    pub alpha: f64,
    pub floor_n0: u64,
}

impl SubsampleRule {
    pub fn new(c: f64, alpha: f64) -> Result<Self> {
        Self::with_floor(c, alpha, DEFAULT_FLOOR_N0)
    }

    pub fn with_floor(c: f64, alpha: f64, floor_n0: u64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 0.5) {
            return Err(Error::AlphaOutOfRange(alpha));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidScale(c));
        }
        if floor_n0 == 0 {
            return Err(Error::InvalidArgument("floor_n0 must be positive".into()));
        }
        Ok(SubsampleRule { c, alpha, floor_n0 })
    }

    /// Odd subsample size for a list of `n >= 1` keys.
    ///
    /// `c n^alpha` is floored and bumped to the next odd integer, then clamped
    /// to the largest odd number not exceeding `n`.
    pub fn k_of(&self, n: u64) -> u64 {
        if n < self.floor_n0 || n <= 1 {
            return 1;
        }
        let x = self.c * (n as f64).powf(self.alpha);
        // absorb the last-ulp error of powf so that exact powers floor correctly
        let fl = (x * (1.0 + 8.0 * f64::EPSILON)).floor();
        let fl = if fl.is_finite() && fl < u64::MAX as f64 { fl as u64 } else { u64::MAX - 1 };
        let rounded = if fl % 2 == 1 { fl } else { fl + 1 };
        let largest_odd = n - (1 - n % 2);
        rounded.max(1).min(largest_odd)
    }
}

/// Law of the rank of the median of a uniform `k`-subset of `{1, ..., n}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitLaw {
    n: u64,
    k: u64,
}

impl SplitLaw {
    pub fn new(n: u64, k: u64) -> Result<Self> {
        if n == 0 || k == 0 || k.is_multiple_of(2) || k > n {
            return Err(Error::InvalidSubsample { n, k });
        }
        Ok(SplitLaw { n, k })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    fn half(&self) -> u64 {
        (self.k - 1) / 2
    }

    /// Inclusive support `(k+1)/2 ..= n-(k-1)/2`.
    pub fn support(&self) -> std::ops::RangeInclusive<u64> {
        (self.half() + 1)..=(self.n - self.half())
    }

    pub fn contains(&self, i: u64) -> bool {
        self.support().contains(&i)
    }

    /// `C(i-1, h) C(n-i, h) / C(n, k)` with `h = (k-1)/2`, exactly.
    pub fn pmf_exact(&self, i: u64) -> BigRational {
        if !self.contains(i) {
            return BigRational::zero();
        }
        let h = self.half();
        let num = binomial_big(i - 1, h) * binomial_big(self.n - i, h);
        BigRational::new(num, binomial_big(self.n, self.k))
    }

    pub fn pmf(&self, i: u64) -> f64 {
        if !self.contains(i) {
            return 0.0;
        }
        if self.n <= EXACT_PMF_MAX_N {
            return self.pmf_exact(i).to_f64().unwrap_or(f64::NAN);
        }
        let h = self.half();
        (ln_binomial(i - 1, h) + ln_binomial(self.n - i, h) - ln_binomial(self.n, self.k)).exp()
    }

    pub fn mean(&self) -> f64 {
        (self.n as f64 + 1.0) / 2.0
    }

    /// `(n-k)(n+1) / (4(k+2))`, from the beta-binomial representation.
    pub fn variance(&self) -> f64 {
        let (n, k) = (self.n as f64, self.k as f64);
        (n - k) * (n + 1.0) / (4.0 * (k + 2.0))
    }

    /// Rank of the median of a uniform `k`-subset, drawn without replacement.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let mut subset = sample_subset(self.n, self.k, rng);
        let mid = subset.len() / 2;
        *subset.select_nth_unstable(mid).1
    }
}

pub fn split_pmf(law: &SplitLaw, i: u64) -> f64 {
    law.pmf(i)
}

pub fn sample_split<R: Rng + ?Sized>(law: &SplitLaw, rng: &mut R) -> u64 {
    law.sample(rng)
}

/// `(mean, variance)` of the pivot rank.
pub fn split_moments(law: &SplitLaw) -> (f64, f64) {
    (law.mean(), law.variance())
}

pub fn binomial_big(n: u64, r: u64) -> BigInt {
    if r > n {
        return BigInt::zero();
    }
    let r = r.min(n - r);
    let mut acc = BigInt::one();
    for j in 0..r {
        acc *= n - j;
        acc /= j + 1;
    }
    acc
}

pub fn ln_binomial(n: u64, r: u64) -> f64 {
    if r > n {
        return f64::NEG_INFINITY;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(r as f64 + 1.0) - ln_gamma((n - r) as f64 + 1.0)
}

/// Uniform `k`-subset of `{1, ..., n}` in uniformly random order.
///
/// Partial Fisher-Yates shuffle; positions displaced so far are tracked in a
/// map, so memory and time are `O(k)` when `k` is small against `n`.
pub fn sample_subset<R: Rng + ?Sized>(n: u64, k: u64, rng: &mut R) -> Vec<u64> {
    assert!(k <= n, "subset size {k} exceeds population {n}");
    let k_us = k as usize;
    let mut out = Vec::with_capacity(k_us);
    if k.saturating_mul(4) >= n {
        let mut pool: Vec<u64> = (1..=n).collect();
        for i in 0..k_us {
            let j = rng.random_range(i..pool.len());
            pool.swap(i, j);
            out.push(pool[i]);
        }
        return out;
    }
    let mut displaced: HashMap<u64, u64> = HashMap::with_capacity(k_us);
    for i in 0..k {
        let j = rng.random_range(i..n);
        let at_i = displaced.get(&i).copied().unwrap_or(i);
        let at_j = displaced.get(&j).copied().unwrap_or(j);
        out.push(at_j + 1);
        displaced.insert(j, at_i);
    }
    out
}

/// Monte Carlo estimates of `P(Beta(a,b) < x)` and `P(Bin(a+b-1, x) >= a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaBinomialCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub trials: u64,
}

impl BetaBinomialCheck {
    /// Standard error of `lhs - rhs` for independent draws.
    pub fn joint_std_error(&self) -> f64 {
        let t = self.trials as f64;
        ((self.lhs * (1.0 - self.lhs) + self.rhs * (1.0 - self.rhs)) / t).sqrt()
    }
}

pub fn beta_binomial_check<R: Rng + ?Sized>(
    a: u64,
    b: u64,
    x: f64,
    trials: u64,
    rng: &mut R,
) -> Result<BetaBinomialCheck> {
    if a == 0 || b == 0 {
        return Err(Error::InvalidArgument(format!("beta parameters must be >= 1, got ({a}, {b})")));
    }
    if !(x > 0.0 && x < 1.0) || trials == 0 {
        return Err(Error::InvalidArgument(format!("need x in (0,1) and trials > 0, got x = {x}")));
    }
    let beta = Beta::new(a as f64, b as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let bin = Binomial::new(a + b - 1, x).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let below = (0..trials).filter(|_| beta.sample(rng) < x).count();
    let above = (0..trials).filter(|_| bin.sample(rng) >= a).count();
    Ok(BetaBinomialCheck {
        lhs: below as f64 / trials as f64,
        rhs: above as f64 / trials as f64,
        trials,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MedianStrategy {
    /// Sampling-based randomized selection (expected linear comparisons).
    #[default]
    RandomizedSelect,
    /// Comparison sort, then the middle element.
    Sort,
}

/// Key comparisons spent on finding the subsample median.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MedianCost {
    pub comparisons: u64,
}

/// Exact median of an odd-length sample, counting key comparisons.
///
/// The sample is permuted in place.
pub fn median_select<T: Ord + Copy, R: Rng + ?Sized>(
    sample: &mut [T],
    strategy: MedianStrategy,
    rng: &mut R,
) -> Result<(T, MedianCost)> {
    if sample.len().is_multiple_of(2) {
        return Err(Error::EvenSample(sample.len()));
    }
    let mid = sample.len() / 2;
    let mut comparisons = 0u64;
    match strategy {
        MedianStrategy::Sort => {
            sample.sort_unstable_by(|a, b| {
                comparisons += 1;
                a.cmp(b)
            });
        }
        MedianStrategy::RandomizedSelect => {
            select_in_place(sample, mid, rng, &mut comparisons);
        }
    }
    Ok((sample[mid], MedianCost { comparisons }))
}

/// Ranges at most this long are split around a uniformly random pivot;
/// longer ranges first pick their pivot from a recursively selected sample.
const SAMPLING_CUTOFF: usize = 32;

/// Puts the element of rank `target` (0-based) at index `target`.
///
/// Floyd-Rivest selection. Every partition compares each non-pivot element
/// exactly once.
fn select_in_place<T: Ord + Copy, R: Rng + ?Sized>(a: &mut [T], target: usize, rng: &mut R, cmp: &mut u64) {
    if a.len() <= 1 {
        return;
    }
    let (mut left, mut right) = (0usize, a.len() - 1);
    while right > left {
        let size = right - left + 1;
        if size > SAMPLING_CUTOFF {
            let n = size as f64;
            let i = (target - left + 1) as f64;
            let z = n.ln();
            let s = 0.5 * (2.0 * z / 3.0).exp();
            let sign = if i < n / 2.0 { -1.0 } else { 1.0 };
            let sd = 0.5 * (z * s * (n - s) / n).sqrt() * sign;
            let lo = (target as f64 - i * s / n + sd).floor().max(left as f64) as usize;
            let hi = ((target as f64 + (n - i) * s / n + sd).floor() as usize).min(right);
            let (lo, hi) = (lo.min(target), hi.max(target));
            select_in_place(&mut a[lo..=hi], target - lo, rng, cmp);
        } else {
            let r = rng.random_range(left..=right);
            a.swap(r, target);
        }
        let p = partition(a, left, right, target, cmp);
        match p.cmp(&target) {
            std::cmp::Ordering::Equal => return,
            std::cmp::Ordering::Less => left = p + 1,
            std::cmp::Ordering::Greater => right = p - 1,
        }
    }
}

/// Lomuto partition of `a[left..=right]` around `a[pivot]`; returns the
/// pivot's final index.
fn partition<T: Ord + Copy>(a: &mut [T], left: usize, right: usize, pivot: usize, cmp: &mut u64) -> usize {
    a.swap(pivot, right);
    let t = a[right];
    let mut store = left;
    for idx in left..right {
        *cmp += 1;
        if a[idx] < t {
            a.swap(idx, store);
            store += 1;
        }
    }
    a.swap(store, right);
    store
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::StreamKey;

    fn rule(c: f64, alpha: f64) -> SubsampleRule {
        SubsampleRule::new(c, alpha).unwrap()
    }

    #[test]
    fn k_of_examples() {
        let r = rule(1.0, 0.5);
        assert_eq!(r.k_of(1), 1);
        assert_eq!(r.k_of(10_000), 101);
        assert_eq!(r.k_of(9), 3);
        assert_eq!(r.k_of(4), 1);
        assert_eq!(r.k_of(1_000_000), 1001);
    }

    #[test]
    fn k_of_is_odd_and_bounded() {
        for &(c, a) in &[(1.0, 0.5), (0.3, 0.25), (5.0, 0.5), (40.0, 0.1)] {
            let r = rule(c, a);
            for n in 1..3000u64 {
                let k = r.k_of(n);
                assert!(k % 2 == 1 && k >= 1 && k <= n, "c={c} a={a} n={n} k={k}");
            }
        }
        // c large clamps to the largest odd k <= n
        assert_eq!(rule(100.0, 0.5).k_of(8), 7);
        assert_eq!(rule(100.0, 0.5).k_of(9), 9);
    }

    #[test]
    fn k_of_tracks_c_n_alpha() {
        let r = rule(2.0, 0.4);
        let n = 1u64 << 40;
        let ratio = r.k_of(n) as f64 / (2.0 * (n as f64).powf(0.4));
        assert!((ratio - 1.0).abs() < 1e-3);
    }

    #[test]
    fn rule_rejects_bad_parameters() {
        assert!(SubsampleRule::new(1.0, 0.0).is_err());
        assert!(SubsampleRule::new(1.0, 0.6).is_err());
        assert!(SubsampleRule::new(0.0, 0.5).is_err());
        assert!(SubsampleRule::new(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn pmf_examples() {
        assert_eq!(SplitLaw::new(3, 3).unwrap().pmf(2), 1.0);
        assert!((SplitLaw::new(5, 3).unwrap().pmf(3) - 0.4).abs() < 1e-15);
        assert!((SplitLaw::new(4, 3).unwrap().pmf(2) - 0.5).abs() < 1e-15);
        assert_eq!(SplitLaw::new(5, 3).unwrap().pmf(1), 0.0);
        assert_eq!(SplitLaw::new(5, 3).unwrap().pmf(5), 0.0);
    }

    #[test]
    fn split_law_rejects_bad_k() {
        assert!(SplitLaw::new(5, 2).is_err());
        assert!(SplitLaw::new(5, 7).is_err());
        assert!(SplitLaw::new(0, 1).is_err());
    }

    #[test]
    fn float_pmf_sums_to_one_above_exact_range() {
        for &(n, k) in &[(61u64, 7u64), (200, 15), (5000, 71)] {
            let law = SplitLaw::new(n, k).unwrap();
            let total: f64 = law.support().map(|i| law.pmf(i)).sum();
            assert!((total - 1.0).abs() < 1e-9, "n={n} k={k} total={total}");
        }
    }

    #[test]
    fn float_pmf_agrees_with_exact_at_the_boundary() {
        let law = SplitLaw::new(60, 11).unwrap();
        for i in law.support() {
            let exact = law.pmf_exact(i).to_f64().unwrap();
            let h = 5;
            let lg = (ln_binomial(i - 1, h) + ln_binomial(60 - i, h) - ln_binomial(60, 11)).exp();
            assert!((exact - lg).abs() <= 1e-10 * exact.max(1e-300));
        }
    }

    #[test]
    fn moments_examples() {
        let (m, v) = split_moments(&SplitLaw::new(5, 3).unwrap());
        assert_eq!(m, 3.0);
        assert!((v - 0.6).abs() < 1e-15);
        assert_eq!(split_moments(&SplitLaw::new(3, 3).unwrap()).1, 0.0);
    }

    #[test]
    fn degenerate_split_always_middle() {
        let law = SplitLaw::new(3, 3).unwrap();
        let mut rng = StreamKey::root(1).rng();
        assert!((0..1000).all(|_| law.sample(&mut rng) == 2));
    }

    #[test]
    fn subset_is_a_set_within_range() {
        let mut rng = StreamKey::root(2).rng();
        for &(n, k) in &[(10u64, 10u64), (1000, 31), (1_000_000, 1001), (7, 3)] {
            let mut s = sample_subset(n, k, &mut rng);
            assert_eq!(s.len() as u64, k);
            assert!(s.iter().all(|&v| v >= 1 && v <= n));
            s.sort_unstable();
            s.dedup();
            assert_eq!(s.len() as u64, k);
        }
    }

    #[test]
    fn median_select_small_cases() {
        let mut rng = StreamKey::root(3).rng();
        let (m, c) = median_select(&mut [5], MedianStrategy::RandomizedSelect, &mut rng).unwrap();
        assert_eq!((m, c.comparisons), (5, 0));
        for _ in 0..200 {
            let (m, c) = median_select(&mut [3, 1, 2], MedianStrategy::RandomizedSelect, &mut rng).unwrap();
            assert_eq!(m, 2);
            assert!(c.comparisons <= 3, "{c:?}");
        }
        assert!(matches!(
            median_select(&mut [1, 2], MedianStrategy::Sort, &mut rng),
            Err(Error::EvenSample(2))
        ));
    }

    #[test]
    fn sort_strategy_bounded_by_pairs() {
        let mut rng = StreamKey::root(4).rng();
        for k in (1..200usize).step_by(2) {
            let mut v: Vec<u64> = sample_subset(10_000, k as u64, &mut rng);
            let mut sorted = v.clone();
            sorted.sort_unstable();
            let (m, c) = median_select(&mut v, MedianStrategy::Sort, &mut rng).unwrap();
            assert_eq!(m, sorted[k / 2]);
            assert!(c.comparisons <= (k * (k - 1) / 2) as u64);
        }
    }

    #[test]
    fn beta_binomial_examples() {
        let mut rng = StreamKey::root(5).rng();
        for &(a, b, x) in &[(1, 1, 0.5), (2, 2, 0.5)] {
            let r = beta_binomial_check(a, b, x, 100_000, &mut rng).unwrap();
            assert!((r.lhs - 0.5).abs() < 0.01 && (r.rhs - 0.5).abs() < 0.01, "{r:?}");
        }
        let r = beta_binomial_check(3, 3, 0.25, 100_000, &mut rng).unwrap();
        assert!((r.lhs - r.rhs).abs() <= 3.0 * r.joint_std_error(), "{r:?}");
        // P(Bin(5, 1/4) >= 3) = 0.103515625
        let se = (0.103515625f64 * (1.0 - 0.103515625) / 1e5).sqrt();
        assert!((r.rhs - 0.103515625).abs() <= 4.0 * se);
        assert!(beta_binomial_check(0, 1, 0.5, 10, &mut rng).is_err());
    }
}
