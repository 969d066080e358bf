//! Finite-dimensional marginals of the normalised profile `Y_n`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{anderson_darling, anderson_darling_normality, covariance_and_se, mean_and_se, replicate, variance_and_se, AndersonDarling, McReport};
use crate::cascade::{covariance, prefix_len_real, AlphaConstants};
use crate::engine::{normalization_scale, rank_at, run_find, FindConfig};
use crate::error::{Error, Result};
use crate::seed::replica_seed;

/// `reps x grid.len()` draws of `Y_n(t)`, one row per replica.
///
/// Each replica drives the single-rank search for every grid point from the
/// same master stream, so a row is a sample of the joint law of one profile
/// read at the grid points.
pub fn sample_normalized(cfg: &FindConfig, n: u64, grid: &[f64], reps: u64, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if let Some(t) = grid.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::InvalidArgument(format!("grid point {t} outside [0, 1]")));
    }
    let scale = normalization_scale(n, &cfg.rule);
    let ranks: Vec<u64> = grid.iter().map(|&t| rank_at(n, t)).collect();
    let centre = 2.0 * n as f64;
    Ok(replicate(reps, |r| {
        let s = replica_seed(seed, r);
        ranks
            .iter()
            .map(|&l| (run_find(n, l, cfg, s).expect("rank in range") as f64 - centre) / scale)
            .collect()
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalReport {
    pub n: u64,
    pub t: f64,
    pub mean: McReport,
    pub variance: McReport,
    /// Test of the raw marginal against `N(0, 1/(1-kappa))`.
    pub normality: AndersonDarling,
    /// Normality of the shape alone, location and scale estimated.
    pub centred_normality: AndersonDarling,
}

/// Mean and variance of `Y_n(t)` against `0` and `1/(1-kappa)`.
pub fn marginal_test(cfg: &FindConfig, n: u64, t: f64, reps: u64, seed: u64) -> Result<MarginalReport> {
    if reps < 2 {
        return Err(Error::InvalidArgument("marginal_test needs at least 2 replicas".into()));
    }
    let consts = AlphaConstants::new(cfg.rule.alpha)?;
    let ys: Vec<f64> = sample_normalized(cfg, n, &[t], reps, seed)?.into_iter().map(|r| r[0]).collect();
    let (m, m_se) = mean_and_se(&ys);
    let (v, v_se) = variance_and_se(&ys);
    let target_var = consts.marginal_variance();
    let law = Normal::new(0.0, target_var.sqrt()).expect("positive variance");
    Ok(MarginalReport {
        n,
        t,
        mean: McReport::new(format!("mean Y_n({t}) n={n}"), reps, m, m_se).with_target(0.0, "limit mean"),
        variance: McReport::new(format!("var Y_n({t}) n={n}"), reps, v, v_se)
            .with_target(target_var, "marginal variance 1/(1-kappa)"),
        normality: anderson_darling(&ys, |x| law.cdf(x)),
        centred_normality: anderson_darling_normality(&ys),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub n: u64,
    pub grid: Vec<f64>,
    /// Row-major `grid.len() x grid.len()` matrix.
    pub entries: Vec<McReport>,
}

impl CovarianceReport {
    pub fn entry(&self, i: usize, j: usize) -> &McReport {
        &self.entries[i * self.grid.len() + j]
    }

    pub fn is_symmetric(&self) -> bool {
        let d = self.grid.len();
        (0..d).all(|i| (0..d).all(|j| self.entry(i, j).point == self.entry(j, i).point))
    }

    /// Cholesky with a relative jitter of `1e-12` on the diagonal.
    pub fn is_positive_semidefinite(&self) -> bool {
        let d = self.grid.len();
        let a: Vec<f64> = self.entries.iter().map(|r| r.point).collect();
        is_psd(&a, d)
    }
}

pub(crate) fn is_psd(a: &[f64], d: usize) -> bool {
    let scale = (0..d).map(|i| a[i * d + i].abs()).fold(0.0, f64::max).max(1e-300);
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i * d + k] * l[j * d + k]).sum();
            if i == j {
                let v = a[i * d + i] + 1e-12 * scale - s;
                if v < 0.0 {
                    return false;
                }
                l[i * d + i] = v.sqrt();
            } else {
                let dj = l[j * d + j];
                l[i * d + j] = if dj > 0.0 { (a[i * d + j] - s) / dj } else { 0.0 };
            }
        }
    }
    true
}

/// Empirical covariance matrix of `(Y_n(t_i))` against the limit kernel.
pub fn fdd_covariance_test(cfg: &FindConfig, n: u64, grid: &[f64], reps: u64, seed: u64) -> Result<CovarianceReport> {
    if reps < 2 || grid.is_empty() {
        return Err(Error::InvalidArgument("need a nonempty grid and at least 2 replicas".into()));
    }
    let consts = AlphaConstants::new(cfg.rule.alpha)?;
    let rows = sample_normalized(cfg, n, grid, reps, seed)?;
    let cols: Vec<Vec<f64>> = (0..grid.len()).map(|i| rows.iter().map(|r| r[i]).collect()).collect();
    let mut entries = Vec::with_capacity(grid.len() * grid.len());
    for (i, &s) in grid.iter().enumerate() {
        for (j, &t) in grid.iter().enumerate() {
            let (c, se) = covariance_and_se(&cols[i], &cols[j]);
            let j_st = prefix_len_real(s, t)?;
            entries.push(
                McReport::new(format!("cov Y_n({s}),Y_n({t}) n={n}"), reps, c, se)
                    .with_target(covariance(j_st, &consts), format!("covariance kernel, prefix {j_st}")),
            );
        }
    }
    Ok(CovarianceReport { n, grid: grid.to_vec(), entries })
}
