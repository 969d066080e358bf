//! Monte Carlo estimators linking simulated FIND profiles to the closed forms
//! of the limit process.

pub mod hypothesis;
pub mod limit;
pub mod paths;
pub mod sup;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use hypothesis::{anderson_darling, anderson_darling_normality, chi_square_gof, ks_two_sample, AndersonDarling, ChiSquare, KsTwoSample};
pub use limit::{fdd_covariance_test, marginal_test, sample_normalized, CovarianceReport, MarginalReport};
pub use paths::{
    critical_slope, holder_estimate, jump_reading_label, level_increments, modulus_bounds, modulus_profile,
    variation_blowup, variation_mean_truncated, variation_sum, BlowupReport, JumpPath, ModulusRow,
};
pub use sup::{
    fixed_point_drift, sup_consistency, sup_mean_bounds, sup_population_step, sup_tail_check, truncation_budget,
    SupConsistency, SupPopulation, SupSettings, TailRow,
};

/// A Monte Carlo estimate, optionally paired with the closed-form value it
/// should reproduce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub estimator: String,
    pub samples: u64,
    pub point: f64,
    pub std_error: f64,
    pub target: Option<f64>,
    pub target_ref: Option<String>,
    /// Allowance on top of `3 * std_error` for truncation or finite-n effects.
    #[serde(default)]
    pub budget: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Green,
    Red,
    /// No target to compare with.
    Info,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Green => "green",
            Verdict::Red => "red",
            Verdict::Info => "info",
        }
    }
}

impl McReport {
    pub fn new(estimator: impl Into<String>, samples: u64, point: f64, std_error: f64) -> Self {
        McReport {
            estimator: estimator.into(),
            samples,
            point,
            std_error,
            target: None,
            target_ref: None,
            budget: 0.0,
        }
    }

    /// Mean of `xs` with standard error `sd / sqrt(n)`.
    pub fn mean_of(estimator: impl Into<String>, xs: &[f64]) -> Self {
        let (m, se) = mean_and_se(xs);
        McReport::new(estimator, xs.len() as u64, m, se)
    }

    pub fn with_target(mut self, target: f64, target_ref: impl Into<String>) -> Self {
        self.target = Some(target);
        self.target_ref = Some(target_ref.into());
        self
    }

    pub fn with_budget(mut self, budget: f64) -> Self {
        self.budget = budget;
        self
    }

    pub fn deviation(&self) -> Option<f64> {
        self.target.map(|t| self.point - t)
    }

    /// Green iff `|point - target| <= 3 std_error + budget`.
    pub fn verdict(&self) -> Verdict {
        match self.target {
            None => Verdict::Info,
            Some(t) if (self.point - t).abs() <= 3.0 * self.std_error + self.budget => Verdict::Green,
            Some(_) => Verdict::Red,
        }
    }
}

/// Pairwise (cascade) summation; the result does not depend on how the
/// inputs were produced, only on their order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Unbiased sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    pairwise_sum(&sq) / (xs.len() - 1) as f64
}

pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let m = mean(xs);
    (m, (sample_variance(xs) / xs.len() as f64).sqrt())
}

/// Unbiased variance and its delta-method standard error `sqrt((m4 - s^4) / n)`.
pub fn variance_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = mean(xs);
    let v = sample_variance(xs);
    let m4: Vec<f64> = xs.iter().map(|x| (x - m).powi(4)).collect();
    let m4 = pairwise_sum(&m4) / n;
    (v, ((m4 - v * v).max(0.0) / n).sqrt())
}

/// Sample covariance and the standard error of the mean of centred products.
pub fn covariance_and_se(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let (mx, my) = (mean(xs), mean(ys));
    let prods: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let c = pairwise_sum(&prods) / (n - 1.0);
    let spread = sample_variance(&prods);
    (c, (spread / n).sqrt())
}

/// `f(0), ..., f(reps-1)` evaluated in parallel, returned in index order.
pub fn replicate<T, F>(reps: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..reps).into_par_iter().map(f).collect()
}

/// `E|N|^p` for a standard normal `N`.
pub fn abs_normal_moment(p: f64) -> f64 {
    use statrs::function::gamma::gamma;
    2f64.powf(p / 2.0) * gamma((p + 1.0) / 2.0) / std::f64::consts::PI.sqrt()
}
