//! Goodness-of-fit tests.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AndersonDarling {
    pub statistic: f64,
    pub p_value: f64,
    pub samples: u64,
}

/// Anderson-Darling test of `xs` against the fully specified CDF `cdf`.
///
/// p-values use the Marsaglia & Marsaglia (2004) approximation of the
/// finite-`n` null distribution.
pub fn anderson_darling(xs: &[f64], cdf: impl Fn(f64) -> f64) -> AndersonDarling {
    let n = xs.len();
    assert!(n > 0, "empty sample");
    let mut u: Vec<f64> = xs.iter().map(|&x| cdf(x).clamp(1e-300, 1.0 - 1e-16)).collect();
    u.sort_by(f64::total_cmp);
    let nf = n as f64;
    let s: f64 = (0..n)
        .map(|i| (2 * i + 1) as f64 * (u[i].ln() + (1.0 - u[n - 1 - i]).ln()))
        .sum();
    let statistic = -nf - s / nf;
    AndersonDarling { statistic, p_value: 1.0 - ad_cdf(n, statistic), samples: n as u64 }
}

/// Anderson-Darling normality test with mean and variance estimated from
/// the sample. Reports the modified statistic `A^2 (1 + 0.75/n + 2.25/n^2)`
/// and the D'Agostino-Stephens p-value.
pub fn anderson_darling_normality(xs: &[f64]) -> AndersonDarling {
    use statrs::distribution::Normal;
    let n = xs.len();
    assert!(n > 2, "need at least 3 observations");
    let (m, v) = (super::mean(xs), super::sample_variance(xs));
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    let sd = v.sqrt().max(f64::MIN_POSITIVE);
    let raw = anderson_darling(xs, |x| std.cdf((x - m) / sd)).statistic;
    let nf = n as f64;
    let a = raw * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
    let p = if a >= 0.6 {
        (1.2937 - 5.709 * a + 0.0186 * a * a).exp()
    } else if a >= 0.34 {
        (0.9177 - 4.279 * a - 1.38 * a * a).exp()
    } else if a >= 0.2 {
        1.0 - (-8.318 + 42.796 * a - 59.938 * a * a).exp()
    } else {
        1.0 - (-13.436 + 101.14 * a - 223.73 * a * a).exp()
    };
    AndersonDarling { statistic: a, p_value: p.clamp(0.0, 1.0), samples: n as u64 }
}

/// Limiting CDF of the A-D statistic.
fn ad_inf(z: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    if z < 2.0 {
        (-1.233_714_1 / z).exp() / z.sqrt()
            * (2.00012 + (0.247105 - (0.0649821 - (0.0347962 - (0.011672 - 0.00168691 * z) * z) * z) * z) * z)
    } else {
        (-(1.0776 - (2.30695 - (0.43424 - (0.082433 - (0.008056 - 0.0003146 * z) * z) * z) * z) * z).exp()).exp()
    }
}

fn ad_errfix(n: usize, x: f64) -> f64 {
    let n = n as f64;
    if x > 0.8 {
        return (-130.2137 + (745.2337 - (1705.091 - (1950.646 - (1116.360 - 255.7844 * x) * x) * x) * x) * x) / n;
    }
    let c = 0.01265 + 0.1757 / n;
    if x < c {
        let t = x / c;
        let t = t.sqrt() * (1.0 - t) * (49.0 * t - 102.0);
        return t * (0.0037 / (n * n) + 0.00078 / n + 0.00006) / n;
    }
    let t = (x - c) / (0.8 - c);
    let t = -0.00022633 + (6.54034 - (14.6538 - (14.458 - (8.259 - 1.91864 * t) * t) * t) * t) * t;
    t * (0.04213 + 0.01365 / n) / n
}

fn ad_cdf(n: usize, z: f64) -> f64 {
    let x = ad_inf(z);
    (x + ad_errfix(n, x)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: u64,
    pub p_value: f64,
    /// Number of cells after pooling.
    pub cells: usize,
}

/// Pearson chi-square goodness of fit of `observed` counts against cell
/// probabilities `probs`. Cells are pooled left to right until each pooled
/// cell expects at least `min_expected` observations.
pub fn chi_square_gof(observed: &[u64], probs: &[f64], min_expected: f64) -> ChiSquare {
    assert_eq!(observed.len(), probs.len());
    let total: u64 = observed.iter().sum();
    let total_f = total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        o_acc += o as f64;
        e_acc += p * total_f;
        if e_acc >= min_expected {
            cells.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += o_acc;
                last.1 += e_acc;
            }
            None => cells.push((o_acc, e_acc)),
        }
    }
    let statistic: f64 = cells.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells.len().saturating_sub(1) as u64;
    let p_value = if dof == 0 {
        1.0
    } else {
        ChiSquared::new(dof as f64).map(|d| d.sf(statistic)).unwrap_or(f64::NAN)
    };
    ChiSquare { statistic, dof, p_value, cells: cells.len() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsTwoSample {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsTwoSample {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let x = a[i].min(b[j]);
        while i < na && a[i] <= x {
            i += 1;
        }
        while j < nb && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na * nb) as f64 / (na + nb) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    KsTwoSample { statistic: d, p_value: kolmogorov_sf(lambda) }
}

/// `P(K > lambda)` for the Kolmogorov distribution.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..200 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::StreamKey;
    use rand_distr::{Distribution, StandardNormal};
    use statrs::distribution::Normal;

    #[test]
    fn ad_null_quantiles() {
        // classical asymptotic upper quantiles of A^2 for a known distribution
        assert!((ad_inf(2.492) - 0.95).abs() < 2e-3);
        assert!((ad_inf(3.857) - 0.99).abs() < 1e-3);
        assert!((ad_inf(5.973) - 0.999).abs() < 2e-4);
    }

    #[test]
    fn ad_accepts_and_rejects() {
        let mut rng = StreamKey::root(1).rng();
        let xs: Vec<f64> = (0..2000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let std = Normal::new(0.0, 1.0).unwrap();
        assert!(anderson_darling(&xs, |x| std.cdf(x)).p_value > 1e-3);
        let shifted = Normal::new(0.3, 1.0).unwrap();
        assert!(anderson_darling(&xs, |x| shifted.cdf(x)).p_value < 1e-3);
    }

    #[test]
    fn composite_normality() {
        let mut rng = StreamKey::root(3).rng();
        let xs: Vec<f64> = (0..1000).map(|_| { let z: f64 = StandardNormal.sample(&mut rng); 4.0 + 2.0 * z }).collect();
        assert!(anderson_darling_normality(&xs).p_value > 1e-3);
        let skewed: Vec<f64> = xs.iter().map(|x: &f64| (x / 2.0).exp()).collect();
        assert!(anderson_darling_normality(&skewed).p_value < 1e-3);
        // p-value formula breakpoints: 0.752 is the 5% point of the modified statistic
        let p = (1.2937 - 5.709 * 0.752 + 0.0186 * 0.752f64.powi(2)).exp();
        assert!((p - 0.05).abs() < 3e-3);
    }

    #[test]
    fn chi_square_known_value() {
        // 2.4179104477611940 for these counts against a uniform law
        let r = chi_square_gof(&[28, 31, 40, 35], &[0.25; 4], 5.0);
        assert!((r.statistic - 2.417_910_447_761_194).abs() < 1e-12);
        assert_eq!(r.dof, 3);
        assert!((r.p_value - 0.490_309_306_965_388_3).abs() < 1e-9);
    }

    #[test]
    fn chi_square_pools_sparse_tails() {
        let r = chi_square_gof(&[0, 1, 50, 48, 1], &[0.001, 0.009, 0.49, 0.49, 0.01], 5.0);
        assert!(r.cells < 5);
    }

    #[test]
    fn ks_two_sample_behaviour() {
        let mut rng = StreamKey::root(2).rng();
        let a: Vec<f64> = (0..3000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..3000).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert!(ks_two_sample(&a, &b).p_value > 1e-3);
        let c: Vec<f64> = b.iter().map(|x| x + 0.2).collect();
        assert!(ks_two_sample(&a, &c).p_value < 1e-3);
        assert!((kolmogorov_sf(1.358) - 0.05).abs() < 1e-3);
    }
}
