//! Path functionals of cascade realisations: jump sums, modulus of
//! continuity on the `d_kappa` scale, Hölder ratios.

use serde::{Deserialize, Serialize};

use super::{abs_normal_moment, covariance_and_se, mean, mean_and_se, replicate, McReport};
use crate::cascade::{jump_variance, jump_variance_truncated, AlphaConstants, GaussianCascade, JUMP_INDEX_READING};
use crate::error::{Error, Result};
use crate::seed::replica_seed;
use crate::step::{DyadicStepFunction, StepFunction};

/// Paths whose jumps can be listed.
pub trait JumpPath {
    fn jump_sizes(&self) -> Vec<f64>;
}

impl JumpPath for StepFunction {
    fn jump_sizes(&self) -> Vec<f64> {
        self.jumps().map(|(_, d)| d).collect()
    }
}

impl JumpPath for DyadicStepFunction {
    fn jump_sizes(&self) -> Vec<f64> {
        self.jumps().collect()
    }
}

/// `sum |jump|^p` over all jumps of the path.
pub fn variation_sum<P: JumpPath + ?Sized>(z: &P, p: f64) -> f64 {
    z.jump_sizes().iter().map(|d| d.abs().powf(p)).sum()
}

/// Exact `E sum |jump|^p` of `Z_m`: `2^{i-1}` jumps of minimal level `i`,
/// each centred normal with the truncated jump variance.
pub fn variation_mean_truncated(consts: &AlphaConstants, m: u32, p: f64) -> f64 {
    let e = abs_normal_moment(p);
    (1..=m)
        .map(|i| 2f64.powi(i as i32 - 1) * e * jump_variance_truncated(i, m, consts).powf(p / 2.0))
        .sum()
}

/// Per-level growth of the mean jump sum at `p = p_alpha`, for each reading
/// of the jump index.
pub fn critical_slope(consts: &AlphaConstants) -> (f64, f64) {
    use crate::cascade::JumpIndexReading::{CommonPrefix, MinimalLevel};
    let p = consts.p_alpha;
    let e = abs_normal_moment(p);
    // 2^{i-1} jumps of variance gamma kappa^{i-1} (resp. kappa^i); with
    // kappa^{p/2} = 1/2 every level contributes the same amount.
    let per_level = |r| e * jump_variance(1, consts, r).powf(p / 2.0);
    (per_level(CommonPrefix), per_level(MinimalLevel))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub p: f64,
    pub depths: Vec<u32>,
    /// Mean jump sum at each depth, against the exact truncated mean.
    pub means: Vec<McReport>,
    /// `W(depths[i+1]) - W(depths[i])`, against the exact difference.
    pub increments: Vec<McReport>,
    /// `increment[i+1] / increment[i]` (delta-method standard error),
    /// against `2 kappa^{p/2}`.
    pub ratios: Vec<McReport>,
    /// Least-squares slope of the mean jump sum in the depth.
    pub slope: f64,
}

/// Jump sums at several depths of the same cascades, for each of `seeds`
/// replicas. Depths share their node normals, so increments are coupled.
pub fn variation_blowup(consts: &AlphaConstants, depths: &[u32], p: f64, seeds: u64, seed: u64) -> Result<BlowupReport> {
    if depths.is_empty() || depths.windows(2).any(|w| w[0] >= w[1]) || seeds < 2 {
        return Err(Error::InvalidArgument("need increasing depths and at least 2 seeds".into()));
    }
    let max_depth = *depths.last().unwrap();
    let rows: Vec<Result<Vec<f64>>> = replicate(seeds, |r| {
        let cascade = GaussianCascade::generate(replica_seed(seed, r), max_depth)?;
        depths
            .iter()
            .map(|&m| Ok(variation_sum(&cascade.truncated_path(m, consts)?, p)))
            .collect()
    });
    let rows: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_>>()?;
    let column = |i: usize| -> Vec<f64> { rows.iter().map(|r| r[i]).collect() };

    let means: Vec<McReport> = depths
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            McReport::mean_of(format!("W_p m={m} p={p:.4}"), &column(i))
                .with_target(variation_mean_truncated(consts, m, p), "truncated jump-sum mean")
        })
        .collect();

    let diffs: Vec<Vec<f64>> = (1..depths.len())
        .map(|i| column(i).iter().zip(column(i - 1)).map(|(a, b)| a - b).collect())
        .collect();
    let increments: Vec<McReport> = diffs
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let (lo, hi) = (depths[i], depths[i + 1]);
            let exact = variation_mean_truncated(consts, hi, p) - variation_mean_truncated(consts, lo, p);
            McReport::mean_of(format!("W_p({hi})-W_p({lo}) p={p:.4}"), d).with_target(exact, "truncated increment")
        })
        .collect();

    let limit_ratio = 2.0 * consts.kappa.powf(p / 2.0);
    let ratios = diffs
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let (a, sa) = mean_and_se(&w[0]);
            let (b, sb) = mean_and_se(&w[1]);
            let (cov, _) = covariance_and_se(&w[0], &w[1]);
            let cov_mean = cov / w[0].len() as f64;
            let r = b / a;
            let var = r * r * (sb * sb / (b * b) + sa * sa / (a * a) - 2.0 * cov_mean / (a * b));
            McReport::new(format!("increment ratio at m={} p={p:.4}", depths[i + 2]), seeds, r, var.max(0.0).sqrt())
                .with_target(limit_ratio, "2 kappa^{p/2}")
        })
        .collect();

    let xs: Vec<f64> = depths.iter().map(|&m| m as f64).collect();
    let ys: Vec<f64> = means.iter().map(|r| r.point).collect();
    Ok(BlowupReport { p, depths: depths.to_vec(), means, increments, ratios, slope: ls_slope(&xs, &ys) })
}

fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let (mx, my) = (mean(xs), mean(ys));
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Largest `|Z(t) - Z(s)|` over grid pairs whose common binary prefix has
/// length exactly `L`, for `L = 0..m`.
///
/// Pairs with prefix length `L` sit in the two halves of one level-`L`
/// block, so block-wise minima and maxima suffice.
pub fn level_increments(z: &DyadicStepFunction) -> Vec<f64> {
    let m = z.depth() as usize;
    let mut lo: Vec<f64> = z.values().to_vec();
    let mut hi: Vec<f64> = z.values().to_vec();
    let mut out = vec![0.0; m];
    for level in (0..m).rev() {
        let mut best: f64 = 0.0;
        let mut next_lo = Vec::with_capacity(lo.len() / 2);
        let mut next_hi = Vec::with_capacity(lo.len() / 2);
        for b in 0..lo.len() / 2 {
            let (l_lo, l_hi, r_lo, r_hi) = (lo[2 * b], hi[2 * b], lo[2 * b + 1], hi[2 * b + 1]);
            best = best.max(r_hi - l_lo).max(l_hi - r_lo);
            next_lo.push(l_lo.min(r_lo));
            next_hi.push(l_hi.max(r_hi));
        }
        out[level] = best;
        lo = next_lo;
        hi = next_hi;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusRow {
    pub level: u32,
    /// `kappa^L`.
    pub h: f64,
    /// Sup of `|Z(t) - Z(s)|` over pairs with `d_kappa = kappa^L`.
    pub sup_increment: f64,
    /// Same, over pairs with `d_kappa <= kappa^L`; nonincreasing in `L`.
    pub sup_increment_within: f64,
    /// `sup_increment / sqrt(h log(1/h))`.
    pub normalized: f64,
}

/// `(lower, upper)` constants bracketing the limsup of the normalised
/// modulus along `h = kappa^L`.
pub fn modulus_bounds(consts: &AlphaConstants) -> (f64, f64) {
    let l = (1.0 / consts.kappa).ln();
    let ln2 = std::f64::consts::LN_2;
    let lower = (2.0 * consts.gamma * ln2 / l).sqrt();
    let upper = 2.0 * (2.0 * ln2).sqrt() / (l.sqrt() * (1.0 - consts.kappa.sqrt()));
    (lower, upper)
}

pub fn modulus_profile(z: &DyadicStepFunction, consts: &AlphaConstants, levels: &[u32]) -> Result<Vec<ModulusRow>> {
    if let Some(&l) = levels.iter().find(|&&l| l == 0 || l >= z.depth()) {
        return Err(Error::InvalidArgument(format!("level {l} outside 1..{}", z.depth())));
    }
    let inc = level_increments(z);
    let mut within = inc.clone();
    for l in (0..within.len().saturating_sub(1)).rev() {
        within[l] = within[l].max(within[l + 1]);
    }
    Ok(levels
        .iter()
        .map(|&level| {
            let h = consts.kappa.powi(level as i32);
            let sup_increment = inc[level as usize];
            ModulusRow {
                level,
                h,
                sup_increment,
                sup_increment_within: within[level as usize],
                normalized: sup_increment / (h * (1.0 / h).ln()).sqrt(),
            }
        })
        .collect())
}

/// `max |Z(t) - Z(s)| / d_kappa(s, t)^beta` over grid pairs.
pub fn holder_estimate(z: &DyadicStepFunction, consts: &AlphaConstants, beta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::InvalidArgument(format!("Hölder exponent {beta} outside [0, 1)")));
    }
    Ok(level_increments(z)
        .iter()
        .enumerate()
        .map(|(l, &d)| d / consts.kappa.powf(beta * l as f64))
        .fold(0.0, f64::max))
}

/// The reading of the jump index in force; recorded in reports.
pub fn jump_reading_label() -> &'static str {
    match JUMP_INDEX_READING {
        crate::cascade::JumpIndexReading::CommonPrefix => "common-prefix (gamma kappa^{i-1})",
        crate::cascade::JumpIndexReading::MinimalLevel => "minimal-level (gamma kappa^i)",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::{build_zm, constants, d_kappa, jump_at, prefix_len, DyadicRational};

    fn c05() -> AlphaConstants {
        constants(0.5).unwrap()
    }

    #[test]
    fn variation_of_constant_is_zero() {
        assert_eq!(variation_sum(&StepFunction::constant(3.0), 1.5), 0.0);
    }

    #[test]
    fn depth_one_single_jump() {
        let z = build_zm(1, &c05(), 17).unwrap();
        let n = z.values()[0];
        assert!((variation_sum(&z, 1.7) - (2.0 * n).abs().powf(1.7)).abs() < 1e-12);
    }

    #[test]
    fn quadratic_jump_sum_agrees_with_jump_at() {
        let z = build_zm(9, &c05(), 3).unwrap();
        let direct: f64 = (1..512u64)
            .map(|i| jump_at(&z, DyadicRational::new(i, 9).unwrap()).unwrap().powi(2))
            .sum();
        assert_eq!(variation_sum(&z, 2.0), direct);
    }

    #[test]
    fn exact_quadratic_mean() {
        // frozen from an independent evaluation of the per-level sum
        assert!((variation_mean_truncated(&c05(), 14, 2.0) - 17.231_405_267_402_405).abs() < 1e-9);
        let (common, minimal) = critical_slope(&c05());
        assert!((common - 2.459_753_904_757_67).abs() < 1e-9);
        assert!((common / minimal - 2.0).abs() < 1e-12);
    }

    fn brute_increments(z: &DyadicStepFunction) -> Vec<f64> {
        let m = z.depth();
        let mut out = vec![0.0f64; m as usize];
        for a in 0..z.pieces() as u64 {
            for b in (a + 1)..z.pieces() as u64 {
                let j = prefix_len(DyadicRational::new(a, m).unwrap(), DyadicRational::new(b, m).unwrap());
                let j = j.finite().unwrap() as usize;
                let d = (z.values()[a as usize] - z.values()[b as usize]).abs();
                out[j] = out[j].max(d);
            }
        }
        out
    }

    #[test]
    fn level_increments_match_brute_force() {
        for seed in 0..5 {
            let z = build_zm(7, &c05(), seed).unwrap();
            assert_eq!(level_increments(&z), brute_increments(&z));
        }
    }

    #[test]
    fn modulus_constants() {
        let (lo, hi) = modulus_bounds(&c05());
        assert!((lo - 2.606).abs() < 1e-3);
        assert!((hi - 5.697).abs() < 1e-3);
    }

    #[test]
    fn modulus_within_is_monotone() {
        let z = build_zm(12, &c05(), 8).unwrap();
        let rows = modulus_profile(&z, &c05(), &(1..12).collect::<Vec<_>>()).unwrap();
        assert!(rows.windows(2).all(|w| w[0].sup_increment_within >= w[1].sup_increment_within));
        assert!(modulus_profile(&z, &c05(), &[12]).is_err());
    }

    #[test]
    fn holder_at_zero_is_range() {
        let z = build_zm(10, &c05(), 2).unwrap();
        let range = z.sup() - z.values().iter().copied().fold(f64::INFINITY, f64::min);
        assert!((holder_estimate(&z, &c05(), 0.0).unwrap() - range).abs() < 1e-12);
    }

    #[test]
    fn holder_brute_force() {
        let c = c05();
        let z = build_zm(6, &c, 21).unwrap();
        let mut best: f64 = 0.0;
        for a in 0..64u64 {
            for b in (a + 1)..64 {
                let j = prefix_len(DyadicRational::new(a, 6).unwrap(), DyadicRational::new(b, 6).unwrap());
                let d = (z.values()[a as usize] - z.values()[b as usize]).abs();
                best = best.max(d / d_kappa(j, &c).powf(0.3));
            }
        }
        assert!((holder_estimate(&z, &c, 0.3).unwrap() - best).abs() < 1e-12);
    }
}
