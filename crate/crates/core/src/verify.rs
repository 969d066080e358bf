//! Verification batteries. Each battery produces a list of [`Check`]s tagged
//! with the acceptance criterion they belong to; a run is green when every
//! check passes.

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::cascade::{
    build_zm, covariance, eval_piece, glue, jump_at_lazy, jump_variance_truncated, prefix_len, AlphaConstants,
    DyadicRational, JumpIndexReading, JUMP_INDEX_READING,
};
use crate::engine::{
    normalization_scale, profile, profile_breakdown, rank_at, run_find, sup_count, FindConfig, Variant,
};
use crate::error::{Error, Result};
use crate::pivot::{median_select, sample_subset, MedianStrategy, SplitLaw, SubsampleRule};
use crate::seed::{replica_seed, StreamKey};
use crate::stats::{
    self, anderson_darling, chi_square_gof, covariance_and_se, fdd_covariance_test,
    fixed_point_drift, holder_estimate, ks_two_sample, marginal_test, modulus_bounds,
    modulus_profile, replicate, sup_consistency, sup_mean_bounds, sup_tail_check, variance_and_se, variation_blowup,
    McReport, SupPopulation, SupSettings,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Battery {
    Split,
    Equivalence,
    Engine,
    Marginal,
    Cov,
    Cascade,
    Sup,
    Tail,
    Jump,
    Variation,
    Modulus,
}

impl Battery {
    pub const ALL: [Battery; 11] = [
        Battery::Split,
        Battery::Equivalence,
        Battery::Engine,
        Battery::Marginal,
        Battery::Cov,
        Battery::Cascade,
        Battery::Sup,
        Battery::Tail,
        Battery::Jump,
        Battery::Variation,
        Battery::Modulus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Battery::Split => "split",
            Battery::Equivalence => "equivalence",
            Battery::Engine => "engine",
            Battery::Marginal => "marginal",
            Battery::Cov => "cov",
            Battery::Cascade => "cascade",
            Battery::Sup => "sup",
            Battery::Tail => "tail",
            Battery::Jump => "jump",
            Battery::Variation => "variation",
            Battery::Modulus => "modulus",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Battery::ALL.into_iter().find(|b| b.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Fast,
    Full,
}

/// Every knob of a verification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySettings {
    pub preset: Preset,
    pub alpha: f64,
    pub c: f64,
    pub seed: u64,
    /// Variant used for the marginal and covariance batteries.
    pub variant: Variant,
    /// Sizes of the marginal trend; the last one also drives cov and sup.
    pub ns: Vec<u64>,
    pub marginal_ts: Vec<f64>,
    pub marginal_reps: u64,
    pub cov_grids: Vec<Vec<f64>>,
    pub cov_reps: u64,
    pub split_draws: u64,
    pub clt_samples: u64,
    pub median_reps: u64,
    pub equivalence_max_n: u64,
    pub equivalence_seeds: u64,
    pub engine_reps: u64,
    pub cascade_depth: u32,
    pub cascade_seeds: u64,
    pub sup_reps: u64,
    pub sup_depth: u32,
    pub sup_cascade_seeds: u64,
    pub population: usize,
    pub generations: u32,
    pub jump_depth: u32,
    pub jump_seeds: u64,
    pub variation_depths: Vec<u32>,
    pub variation_seeds: u64,
    pub p_offset: f64,
    pub modulus_depth: u32,
    pub modulus_seeds: u64,
    pub modulus_levels: Vec<u32>,
    /// Negative control: shifts the marginal-variance targets by +1.
    pub tamper: bool,
}

impl VerifySettings {
    /// Desk-scale run: `n <= 10^4`, at most 200 replicas of the algorithm.
    pub fn fast(alpha: f64, c: f64, seed: u64) -> Self {
        VerifySettings {
            preset: Preset::Fast,
            alpha,
            c,
            seed,
            variant: Variant::TwoVersion,
            ns: vec![1_000, 10_000],
            marginal_ts: vec![0.3],
            marginal_reps: 200,
            cov_grids: vec![vec![0.2, 0.7], vec![0.26, 0.30]],
            cov_reps: 200,
            split_draws: 20_000,
            clt_samples: 2_000,
            median_reps: 1_000,
            equivalence_max_n: 60,
            equivalence_seeds: 5,
            engine_reps: 200,
            cascade_depth: 12,
            cascade_seeds: 10_000,
            sup_reps: 100,
            sup_depth: 12,
            sup_cascade_seeds: 500,
            population: 10_000,
            generations: 30,
            jump_depth: 12,
            jump_seeds: 10_000,
            variation_depths: (6..=11).collect(),
            variation_seeds: 500,
            p_offset: 0.2,
            modulus_depth: 12,
            modulus_seeds: 20,
            modulus_levels: (4..=8).collect(),
            tamper: false,
        }
    }

    /// The parameters stated by the acceptance criteria.
    pub fn full(alpha: f64, c: f64, seed: u64) -> Self {
        VerifySettings {
            preset: Preset::Full,
            ns: vec![1_000, 10_000, 100_000],
            marginal_reps: 500,
            cov_reps: 4_000,
            split_draws: 100_000,
            clt_samples: 10_000,
            median_reps: 10_000,
            equivalence_max_n: 200,
            equivalence_seeds: 50,
            engine_reps: 10_000,
            sup_reps: 200,
            sup_depth: 16,
            sup_cascade_seeds: 4_000,
            population: 100_000,
            generations: 40,
            jump_depth: 14,
            jump_seeds: 100_000,
            variation_depths: (6..=14).collect(),
            variation_seeds: 4_000,
            modulus_depth: 16,
            modulus_seeds: 100,
            modulus_levels: (6..=12).collect(),
            ..Self::fast(alpha, c, seed)
        }
    }

    pub fn rule(&self) -> Result<SubsampleRule> {
        SubsampleRule::new(self.c, self.alpha)
    }

    pub fn consts(&self) -> Result<AlphaConstants> {
        AlphaConstants::new(self.alpha)
    }

    fn largest_n(&self) -> u64 {
        *self.ns.last().expect("validated nonempty")
    }

    /// Independent stream for each battery.
    fn battery_seed(&self, b: Battery) -> u64 {
        StreamKey::root(self.seed).child(b as u64 + 1).value()
    }

    pub fn validate(&self) -> Result<()> {
        self.rule()?;
        if self.ns.is_empty() || self.ns.contains(&0) {
            return Err(Error::InvalidArgument("need at least one n, all >= 1".into()));
        }
        if self.marginal_ts.is_empty() || self.cov_grids.iter().any(|g| g.is_empty()) {
            return Err(Error::InvalidArgument("empty grid".into()));
        }
        if self.marginal_reps < 2 || self.cov_reps < 2 {
            return Err(Error::InvalidArgument("need at least 2 replicas".into()));
        }
        Ok(())
    }
}

/// One verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    /// `AC1` .. `AC9` for acceptance criteria, `aux` for supporting checks.
    pub criterion: String,
    pub battery: Battery,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub reports: Vec<McReport>,
}

impl Check {
    fn new(criterion: &str, battery: Battery, name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            criterion: criterion.to_string(),
            battery,
            name: name.into(),
            passed,
            detail: detail.into(),
            reports: Vec::new(),
        }
    }

    fn with_reports(mut self, reports: Vec<McReport>) -> Self {
        self.reports = reports;
        self
    }

    /// A check that passes iff the report's own verdict is green.
    fn from_report(criterion: &str, battery: Battery, report: McReport) -> Self {
        let passed = report.verdict() == stats::Verdict::Green;
        let detail = format!(
            "{:.5} +- {:.5} vs {:.5} (3 SE + {:.4})",
            report.point,
            report.std_error,
            report.target.unwrap_or(f64::NAN),
            report.budget
        );
        Check::new(criterion, battery, report.estimator.clone(), passed, detail).with_reports(vec![report])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub settings: VerifySettings,
    pub jump_reading: String,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failing(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn reports(&self) -> Vec<McReport> {
        self.checks.iter().flat_map(|c| c.reports.iter().cloned()).collect()
    }

    pub fn criterion_passed(&self, criterion: &str) -> Option<bool> {
        let mut any = false;
        let mut all = true;
        for c in self.checks.iter().filter(|c| c.criterion == criterion) {
            any = true;
            all &= c.passed;
        }
        any.then_some(all)
    }
}

pub fn run(settings: &VerifySettings, batteries: &[Battery]) -> Result<VerifyReport> {
    settings.validate()?;
    let mut checks = Vec::new();
    for &b in batteries {
        checks.extend(run_battery(settings, b)?);
    }
    Ok(VerifyReport { settings: settings.clone(), jump_reading: stats::paths::jump_reading_label().into(), checks })
}

pub fn run_battery(s: &VerifySettings, b: Battery) -> Result<Vec<Check>> {
    match b {
        Battery::Split => split_battery(s),
        Battery::Equivalence => equivalence_battery(s),
        Battery::Engine => engine_battery(s),
        Battery::Marginal => marginal_battery(s),
        Battery::Cov => cov_battery(s),
        Battery::Cascade => cascade_battery(s),
        Battery::Sup => sup_battery(s),
        Battery::Tail => tail_battery(s),
        Battery::Jump => jump_battery(s),
        Battery::Variation => variation_battery(s),
        Battery::Modulus => modulus_battery(s),
    }
}

/// Exact rational sums `(sum p, sum i p, sum i^2 p)` over the support.
pub fn exact_split_sums(law: &SplitLaw) -> (BigRational, BigRational, BigRational) {
    let mut total = BigRational::zero();
    let mut first = BigRational::zero();
    let mut second = BigRational::zero();
    for i in law.support() {
        let p = law.pmf_exact(i);
        let iv = BigRational::from_integer(i.into());
        first += &p * &iv;
        second += &p * &iv * &iv;
        total += p;
    }
    (total, first, second)
}

fn split_battery(s: &VerifySettings) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let b = Battery::Split;

    let mut bad = Vec::new();
    let mut cases = 0;
    for n in 1..=60u64 {
        for k in (1..=n.min(11)).step_by(2) {
            cases += 1;
            let law = SplitLaw::new(n, k)?;
            let (total, first, second) = exact_split_sums(&law);
            let mean = BigRational::new((n + 1).into(), 2u64.into());
            let var = &second - &first * &first;
            let formula = BigRational::new(((n - k) * (n + 1)).into(), (4 * (k + 2)).into());
            if !total.is_one() || first != mean || var != formula {
                bad.push((n, k));
            }
        }
    }
    out.push(Check::new(
        "AC1",
        b,
        "exact split law: mass 1, mean (n+1)/2, variance (n-k)(n+1)/(4(k+2))",
        bad.is_empty(),
        format!("{cases} (n, k) pairs checked in rational arithmetic, failures {bad:?}"),
    ));

    let seed = s.battery_seed(b);
    for (idx, &(n, k)) in [(20u64, 5u64), (50, 7)].iter().enumerate() {
        let law = SplitLaw::new(n, k)?;
        let key = StreamKey::root(seed).child(idx as u64);
        let draws: Vec<u64> = replicate(s.split_draws, |r| law.sample(&mut key.replica(r).rng()));
        let mut counts = vec![0u64; n as usize];
        for d in &draws {
            counts[(*d - 1) as usize] += 1;
        }
        let probs: Vec<f64> = (1..=n).map(|i| law.pmf(i)).collect();
        let chi = chi_square_gof(&counts, &probs, 5.0);
        out.push(Check::new(
            "aux",
            b,
            format!("sampled split rank matches pmf (n={n}, k={k})"),
            chi.p_value > 1e-3,
            format!("chi-square {:.3} on {} dof, p = {:.4}", chi.statistic, chi.dof, chi.p_value),
        ));
    }

    // (I_n - n/2) / n^{1-alpha/2} against N(0, 1/(4c))
    let rule = s.rule()?;
    let n = 1_000_000u64;
    let law = SplitLaw::new(n, rule.k_of(n))?;
    let scale = (n as f64).powf(1.0 - s.alpha / 2.0);
    let key = StreamKey::root(seed).child(7);
    let xs: Vec<f64> = replicate(s.clt_samples, |r| (law.sample(&mut key.replica(r).rng()) as f64 - n as f64 / 2.0) / scale);
    let sd = (1.0 / (4.0 * s.c)).sqrt();
    let normal = Normal::new(0.0, sd).expect("positive");
    let ad = anderson_darling(&xs, |x| normal.cdf(x));
    out.push(Check::new(
        "aux",
        b,
        "pivot-rank CLT at n = 10^6",
        ad.p_value > 1e-3,
        format!("Anderson-Darling A2 = {:.3}, p = {:.4}, {} samples", ad.statistic, ad.p_value, ad.samples),
    ));

    let key = StreamKey::root(seed).child(8);
    let mut ratios = Vec::new();
    for k in [11u64, 101, 1001] {
        let costs: Vec<f64> = replicate(s.median_reps, |r| {
            let mut rng = key.child(k).replica(r).rng();
            let mut sample = sample_subset(100 * k, k, &mut rng);
            let (_, cost) = median_select(&mut sample, MedianStrategy::RandomizedSelect, &mut rng).expect("odd");
            cost.comparisons as f64 / k as f64
        });
        ratios.push(McReport::mean_of(format!("median comparisons / k, k={k}"), &costs));
    }
    let worst = ratios.iter().map(|r| r.point + 3.0 * r.std_error).fold(0.0, f64::max);
    out.push(
        Check::new("aux", b, "median selection uses < 4k comparisons on average", worst < 4.0, format!("largest mean + 3 SE = {worst:.3}"))
            .with_reports(ratios),
    );
    Ok(out)
}

fn equivalence_battery(s: &VerifySettings) -> Result<Vec<Check>> {
    let rule = s.rule()?;
    let seed = s.battery_seed(Battery::Equivalence);
    let mut mismatches = Vec::new();
    let mut compared = 0u64;
    for variant in [Variant::TwoVersion, Variant::ThreeVersion] {
        let cfg = FindConfig::new(variant, rule);
        let per_n: Vec<(u64, Vec<(u64, u64)>)> = replicate(s.equivalence_max_n, |i| {
            let n = i + 1;
            let mut bad = Vec::new();
            for r in 0..s.equivalence_seeds {
                let sd = replica_seed(seed, r);
                let p = profile(n, &cfg, sd);
                for l in 1..=n {
                    if p.count(l) != run_find(n, l, &cfg, sd).expect("rank in range") {
                        bad.push((r, l));
                    }
                }
            }
            (n, bad)
        });
        for (n, bad) in per_n {
            compared += n * s.equivalence_seeds;
            mismatches.extend(bad.into_iter().map(|(r, l)| (variant.code(), n, r, l)));
        }
    }
    Ok(vec![Check::new(
        "AC2",
        Battery::Equivalence,
        "all-ranks profile equals single-rank runs",
        mismatches.is_empty(),
        format!(
            "n = 1..={}, both variants, {} seeds: {compared} rank comparisons, {} mismatches",
            s.equivalence_max_n,
            s.equivalence_seeds,
            mismatches.len()
        ),
    )])
}

fn engine_battery(s: &VerifySettings) -> Result<Vec<Check>> {
    let rule = s.rule()?;
    let b = Battery::Engine;
    let seed = s.battery_seed(b);
    let mut out = Vec::new();

    // 3-version never costs more on average than the 2-version
    let mut gaps = Vec::new();
    for (idx, n) in [100u64, 1_000, 10_000].into_iter().enumerate() {
        let reps = if n > 1_000 { (s.engine_reps / 10).max(100) } else { s.engine_reps };
        let key = StreamKey::root(seed).child(idx as u64);
        let mean_profile = |variant| -> (Vec<f64>, Vec<f64>) {
            let cfg = FindConfig::new(variant, rule);
            let profiles: Vec<Vec<u64>> = replicate(reps, |r| profile(n, &cfg, key.replica(r).value()).counts);
            let mut m = vec![0.0; n as usize];
            let mut m2 = vec![0.0; n as usize];
            for p in &profiles {
                for (l, &c) in p.iter().enumerate() {
                    m[l] += c as f64;
                    m2[l] += (c as f64) * (c as f64);
                }
            }
            let r = reps as f64;
            let var: Vec<f64> = m.iter().zip(&m2).map(|(a, b)| (b - a * a / r) / (r - 1.0)).collect();
            (m.iter().map(|a| a / r).collect(), var)
        };
        let (m2v, v2) = mean_profile(Variant::TwoVersion);
        let (m3v, v3) = mean_profile(Variant::ThreeVersion);
        if n <= 1_000 {
            let violations = (0..n as usize)
                .filter(|&l| m3v[l] > m2v[l] + 3.0 * ((v2[l] + v3[l]) / reps as f64).sqrt())
                .count();
            out.push(Check::new(
                "aux",
                b,
                format!("mean 3-version cost <= mean 2-version cost + 3 SE, n={n}"),
                violations == 0,
                format!("{violations} of {n} ranks violate, {reps} replicas"),
            ));
        }
        let gap = (0..n as usize).map(|l| m2v[l] - m3v[l]).fold(f64::NEG_INFINITY, f64::max) / n as f64;
        gaps.push(gap);
    }
    out.push(Check::new(
        "aux",
        b,
        "sup_l (mean2 - mean3)(l) / n decreases over n = 10^2, 10^3, 10^4",
        gaps.windows(2).all(|w| w[1] < w[0]),
        format!("{gaps:?}"),
    ));
    Ok(out)
}

fn monotone_toward(values: &[f64], target: f64) -> bool {
    values.windows(2).all(|w| (w[1] - target).abs() < (w[0] - target).abs())
}

fn marginal_battery(s: &VerifySettings) -> Result<Vec<Check>> {
    let b = Battery::Marginal;
    let cfg = FindConfig::new(s.variant, s.rule()?);
    let consts = s.consts()?;
    let seed = s.battery_seed(b);
    let shift = if s.tamper { 1.0 } else { 0.0 };
    let target = consts.marginal_variance() + shift;
    let mut out = Vec::new();

    for (ti, &t) in s.marginal_ts.iter().enumerate() {
        let mut reports = Vec::new();
        for &n in &s.ns {
            let mut r = marginal_test(&cfg, n, t, s.marginal_reps, StreamKey::root(seed).child(ti as u64).child(n).value())?;
            r.variance.target = Some(target);
            reports.push(r);
        }
        let vars: Vec<f64> = reports.iter().map(|r| r.variance.point).collect();
        let last = reports.last().expect("nonempty ns");
        let var_reports: Vec<McReport> = reports.iter().map(|r| r.variance.clone()).collect();
        let mean_reports: Vec<McReport> = reports.iter().map(|r| r.mean.clone()).collect();
        out.push(
            Check::new(
                "AC3",
                b,
                format!("Var Y_n({t}) approaches 1/(1-kappa) monotonically over n"),
                monotone_toward(&vars, target),
                format!("estimates {vars:.4?} vs {target:.4}"),
            )
            .with_reports(var_reports),
        );
        let rel = (last.variance.point - target).abs() / target;
        out.push(Check::new(
            "AC3",
            b,
            format!("Var Y_n({t}) within 20% at n={}", last.n),
            rel <= 0.2,
            format!("{:.4} vs {target:.4}, relative error {rel:.3}", last.variance.point),
        ));
        out.push(
            Check::new(
                "aux",
                b,
                format!("E Y_n({t}) within 0.15 of 0 at n={}", last.n),
                last.mean.point.abs() <= 0.15,
                format!("{:.4} +- {:.4}", last.mean.point, last.mean.std_error),
            )
            .with_reports(mean_reports),
        );
        let law = Normal::new(0.0, target.sqrt()).expect("positive");
        let ys: Vec<f64> = crate::stats::sample_normalized(&cfg, last.n, &[t], s.marginal_reps, StreamKey::root(seed).child(ti as u64).child(last.n).value())?
            .into_iter()
            .map(|r| r[0])
            .collect();
        let ad = anderson_darling(&ys, |x| law.cdf(x));
        out.push(Check::new(
            "AC3",
            b,
            format!("Y_n({t}) not rejected against N(0, 1/(1-kappa)) at n={}", last.n),
            ad.p_value > 1e-3,
            format!("A2 = {:.3}, p = {:.3e}", ad.statistic, ad.p_value),
        ));
        out.push(Check::new(
            "aux",
            b,
            format!("shape of Y_n({t}) is normal (location and scale estimated), n={}", last.n),
            last.centred_normality.p_value > 1e-3,
            format!("modified A2 = {:.3}, p = {:.4}", last.centred_normality.statistic, last.centred_normality.p_value),
        ));

        // where the finite-n offset comes from
        let scale = normalization_scale(last.n, &cfg.rule);
        let l = rank_at(last.n, t) as usize - 1;
        let parts: Vec<(f64, f64)> = replicate(s.marginal_reps, |r| {
            let p = profile_breakdown(last.n, &cfg, StreamKey::root(seed).child(99).replica(r).value());
            ((p.partition[l] as f64 - 2.0 * last.n as f64) / scale, p.median[l] as f64 / scale)
        });
        let part: Vec<f64> = parts.iter().map(|p| p.0).collect();
        let med: Vec<f64> = parts.iter().map(|p| p.1).collect();
        let part_r = McReport::mean_of(format!("partition-only part of E Y_n({t}), n={}", last.n), &part)
            .with_target(0.0, "limit mean")
            .with_budget(0.15);
        let med_r = McReport::mean_of(format!("median-selection part of E Y_n({t}), n={}", last.n), &med);
        out.push(
            Check::new(
                "aux",
                b,
                format!("partition comparisons alone centre Y_n({t}) within 0.15, n={}", last.n),
                part_r.verdict() == stats::Verdict::Green,
                format!(
                    "partition part {:.4} +- {:.4}; median-selection part {:.4} +- {:.4}",
                    part_r.point, part_r.std_error, med_r.point, med_r.std_error
                ),
            )
            .with_reports(vec![part_r, med_r]),
        );
    }
    Ok(out)
}

fn cov_battery(s: &VerifySettings) -> Result<Vec<Check>> {
    let b = Battery::Cov;
    let cfg = FindConfig::new(s.variant, s.rule()?);
    let n = s.largest_n();
    let seed = s.battery_seed(b);
    let mut out = Vec::new();
    for (gi, grid) in s.cov_grids.iter().enumerate() {
        let rep = fdd_covariance_test(&cfg, n, grid, s.cov_reps, StreamKey::root(seed).child(gi as u64).value())?;
        let d = grid.len();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i + 1..d {
                let e = rep.entry(i, j);
                worst = worst.max((e.point - e.target.expect("kernel target")).abs());
            }
        }
        let off: Vec<McReport> = (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).map(|(i, j)| rep.entry(i, j).clone()).collect();
        let name = format!("cross-rank covariance on {grid:?} within 0.15 of the kernel, n={n}");
        let detail = off
            .iter()
            .map(|e| format!("{:.4} +- {:.4} vs {:.4}", e.point, e.std_error, e.target.unwrap_or(f64::NAN)))
            .collect::<Vec<_>>()
            .join("; ");
        out.push(Check::new("AC4", b, name, d < 2 || worst <= 0.15, detail).with_reports(off));
        out.push(Check::new(
            "aux",
            b,
            format!("covariance estimate on {grid:?} is symmetric and positive semidefinite"),
            rep.is_symmetric() && rep.is_positive_semidefinite(),
            String::new(),
        ));
    }
    Ok(out)
}

/// Level-`level` dyadic grid `{0, 1/2^level, ...}`.
fn dyadic_grid(level: u32) -> Vec<DyadicRational> {
    (0..1u64 << level).map(|i| DyadicRational::new(i, level).expect("in range")).collect()
}

fn cascade_battery(s: &VerifySettings) -> Result<Vec<Check>> {
    let b = Battery::Cascade;
    let consts = s.consts()?;
    let seed = s.battery_seed(b);
    let m = s.cascade_depth;
    let mut out = Vec::new();

    // covariance on the level-3 grid
    let grid = dyadic_grid(3);
    let pieces: Vec<u64> = grid.iter().map(|t| t.numerator() << (m - t.level())).collect();
    let rows: Vec<Vec<f64>> = replicate(s.cascade_seeds, |r| {
        let z = build_zm(m, &consts, replica_seed(seed, r)).expect("depth validated");
        pieces.iter().map(|&p| z.values()[p as usize]).collect()
    });
    let cols: Vec<Vec<f64>> = (0..grid.len()).map(|i| rows.iter().map(|r| r[i]).collect()).collect();
    let shift = if s.tamper { 1.0 } else { 0.0 };
    let mut reports = Vec::new();
    let mut worst: f64 = 0.0;
    for i in 0..grid.len() {
        for j in i..grid.len() {
            let (c, se) = covariance_and_se(&cols[i], &cols[j]);
            let jp = prefix_len(grid[i], grid[j]);
            let target = covariance(jp, &consts) + if i == j { shift } else { 0.0 };
            worst = worst.max((c - target).abs());
            reports.push(
                McReport::new(format!("cov Z_{m}({}),Z_{m}({})", grid[i].value(), grid[j].value()), s.cascade_seeds, c, se)
                    .with_target(target, format!("covariance kernel, prefix {jp}")),
            );
        }
    }
    out.push(
        Check::new(
            "AC5",
            b,
            format!("cascade covariance on the level-3 grid within 0.05, m={m}"),
            worst <= 0.05,
            format!("largest entrywise deviation {worst:.4} over {} entries", reports.len()),
        )
        .with_reports(reports),
    );

    // mean zero at 16 grid points
    let grid16 = dyadic_grid(4);
    let means: Vec<McReport> = grid16
        .iter()
        .map(|t| {
            let p = (t.numerator() << (m - t.level())) as usize;
            let xs: Vec<f64> = rows
                .iter()
                .enumerate()
                .map(|(r, _)| eval_piece(m, p as u64, &consts, replica_seed(seed, r as u64)))
                .collect();
            McReport::mean_of(format!("E Z_{m}({})", t.value()), &xs).with_target(0.0, "centred process")
        })
        .collect();
    let failures = means.iter().filter(|r| r.verdict() != stats::Verdict::Green).count();
    out.push(
        Check::new("aux", b, "cascade mean is 0 at 16 grid points", failures <= 1, format!("{failures} of 16 outside 3 SE"))
            .with_reports(means),
    );

    // marginal variance of the truncated process
    let xs = &cols[3];
    let (v, se) = variance_and_se(xs);
    let target = (1.0 - consts.kappa.powi(m as i32)) / (1.0 - consts.kappa) + shift;
    out.push(Check::from_report(
        "aux",
        b,
        McReport::new(format!("Var Z_{m}(3/8)"), s.cascade_seeds, v, se).with_target(target, "(1-kappa^m)/(1-kappa)"),
    ));

    // fixed-point property: two depth m-1 paths glued give the depth-m law
    let fp_depth = m.min(10);
    let probe = [1u64, 3, 5, 7].map(|i| DyadicRational::new(i, 3).expect("in range"));
    let key = StreamKey::root(seed).child(0xF1);
    let glued: Vec<Vec<f64>> = replicate(s.cascade_seeds, |r| {
        let k = key.replica(r);
        let left = build_zm(fp_depth - 1, &consts, k.child(0).value()).expect("depth");
        let right = build_zm(fp_depth - 1, &consts, k.child(1).value()).expect("depth");
        let n: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut k.child(2).rng());
        let z = glue(&left, &right, n, &consts);
        probe.iter().map(|t| z.value_at(t.value())).collect()
    });
    let direct: Vec<Vec<f64>> = replicate(s.cascade_seeds, |r| {
        let z = build_zm(fp_depth, &consts, key.child(3).replica(r).value()).expect("depth");
        probe.iter().map(|t| z.value_at(t.value())).collect()
    });
    let mut ps = Vec::new();
    for i in 0..probe.len() {
        let a: Vec<f64> = glued.iter().map(|r| r[i]).collect();
        let d: Vec<f64> = direct.iter().map(|r| r[i]).collect();
        ps.push(ks_two_sample(&a, &d).p_value);
    }
    out.push(Check::new(
        "aux",
        b,
        format!("glued depth-{} paths match depth-{fp_depth} marginals", fp_depth - 1),
        ps.iter().all(|&p| p > 1e-3),
        format!("two-sample KS p-values {ps:.4?}"),
    ));
    Ok(out)
}

fn sup_battery(s: &VerifySettings) -> Result<Vec<Check>> {
    let b = Battery::Sup;
    let rule = s.rule()?;
    let consts = s.consts()?;
    let cfg = FindConfig::new(Variant::ThreeVersion, rule);
    let seed = s.battery_seed(b);
    let settings = SupSettings {
        n: s.largest_n(),
        reps: s.sup_reps,
        depth: s.sup_depth,
        cascade_seeds: s.sup_cascade_seeds,
        population: s.population,
        generations: s.generations,
    };
    let sc = sup_consistency(&cfg, &settings, seed)?;
    let (lo, hi) = sup_mean_bounds(&consts);
    let mut out = vec![Check::new(
        "AC6",
        b,
        "population-dynamics mean of sup Z lies in the proven bounds",
        (lo..=hi).contains(&sc.population.point),
        format!("{:.4} +- {:.4} in [{lo:.4}, {hi:.4}]", sc.population.point, sc.population.std_error),
    )
    .with_reports(vec![sc.population.clone()])];
    out.push(Check::from_report("AC6", b, sc.cascade_gap.clone()).with_reports(vec![sc.cascade.clone(), sc.cascade_gap.clone()]));
    out.push(
        Check::from_report("AC6", b, sc.algorithm_gap.clone()).with_reports(vec![sc.algorithm.clone(), sc.algorithm_gap.clone()]),
    );
    let slack_lo = lo * (1.0 - consts.kappa.powf(s.sup_depth as f64 / 2.0) * 5.0);
    out.push(Check::new(
        "aux",
        b,
        format!("cascade sup mean at m={} within the bounds up to truncation slack", s.sup_depth),
        (slack_lo..=hi).contains(&sc.cascade.point),
        format!("{:.4} in [{slack_lo:.4}, {hi:.4}]", sc.cascade.point),
    ));

    let pop = SupPopulation::converge(consts, s.population, s.generations, StreamKey::root(seed).child(0).value())?;
    let drift = fixed_point_drift(&pop, StreamKey::root(seed).child(5).value());
    out.push(Check::from_report("aux", b, drift));

    // normalised algorithm sup and sup/n over the n trend
    let mut norm = Vec::new();
    let mut ratio = Vec::new();
    for &n in &s.ns {
        let scale = normalization_scale(n, &rule);
        let key = StreamKey::root(seed).child(0x5u64 << 32 | n);
        let sups: Vec<u64> = replicate(s.sup_reps, |r| sup_count(&profile(n, &cfg, key.replica(r).value())));
        let y: Vec<f64> = sups.iter().map(|&x| (x as f64 - 2.0 * n as f64) / scale).collect();
        let q: Vec<f64> = sups.iter().map(|&x| x as f64 / n as f64).collect();
        norm.push(McReport::mean_of(format!("normalized sup X_n, n={n}"), &y));
        ratio.push(McReport::mean_of(format!("sup X_n / n, n={n}"), &q));
    }
    let points: Vec<f64> = norm.iter().map(|r| r.point).collect();
    out.push(
        Check::new(
            "aux",
            b,
            "normalized algorithm sup moves monotonically toward the cascade value over n",
            monotone_toward(&points, sc.cascade.point),
            format!("{points:.4?} toward {:.4}", sc.cascade.point),
        )
        .with_reports(norm),
    );
    let qs: Vec<f64> = ratio.iter().map(|r| r.point).collect();
    out.push(
        Check::new(
            "aux",
            b,
            "sup X_n / n decreases toward 2",
            qs.windows(2).all(|w| w[1] < w[0]) && qs.iter().all(|&q| q > 2.0),
            format!("{qs:.4?}"),
        )
        .with_reports(ratio),
    );
    Ok(out)
}

fn tail_battery(s: &VerifySettings) -> Result<Vec<Check>> {
    let consts = s.consts()?;
    let seed = s.battery_seed(Battery::Tail);
    let pop = SupPopulation::converge(consts, s.population, s.generations, seed)?;
    Ok(sup_tail_check(&pop, &stats::sup::TAIL_POINTS)
        .into_iter()
        .map(|row| {
            Check::new(
                "AC6",
                Battery::Tail,
                format!("P(|S - E S| >= {}) below the concentration bound", row.t),
                row.holds(),
                format!("empirical {:.5} vs bound {:.5}", row.empirical, row.bound),
            )
        })
        .collect())
}

/// Which reading of the jump index the Monte Carlo variance supports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpResolution {
    pub variance: McReport,
    pub common_prefix: f64,
    pub minimal_level: f64,
    pub winner: JumpIndexReading,
}

pub fn resolve_jump_reading(consts: &AlphaConstants, depth: u32, seeds: u64, seed: u64) -> Result<JumpResolution> {
    let half = DyadicRational::new(1, 1)?;
    let xs: Vec<f64> = replicate(seeds, |r| jump_at_lazy(depth, half, consts, replica_seed(seed, r)).expect("on grid"));
    let (v, se) = variance_and_se(&xs);
    let common_prefix = jump_variance_truncated(1, depth, consts);
    let minimal_level = consts.gamma * consts.kappa;
    let winner = if (v - common_prefix).abs() < (v - minimal_level).abs() {
        JumpIndexReading::CommonPrefix
    } else {
        JumpIndexReading::MinimalLevel
    };
    let target = match winner {
        JumpIndexReading::CommonPrefix => common_prefix,
        JumpIndexReading::MinimalLevel => minimal_level,
    };
    let variance = McReport::new(format!("Var jump of Z_{depth} at 1/2"), seeds, v, se)
        .with_target(target, format!("{winner:?} reading"));
    Ok(JumpResolution { variance, common_prefix, minimal_level, winner })
}

fn jump_battery(s: &VerifySettings) -> Result<Vec<Check>> {
    let b = Battery::Jump;
    let consts = s.consts()?;
    let seed = s.battery_seed(b);
    let m = s.jump_depth;
    let res = resolve_jump_reading(&consts, m, s.jump_seeds, seed)?;
    let mut out = vec![Check::new(
        "AC7",
        b,
        "jump variance at 1/2 decides the index reading, and matches the one in force",
        res.winner == JUMP_INDEX_READING && res.variance.verdict() == stats::Verdict::Green,
        format!(
            "{:.4} +- {:.4}; gamma kappa^(i-1) = {:.4}, gamma kappa^i = {:.4}; winner {:?}",
            res.variance.point, res.variance.std_error, res.common_prefix, res.minimal_level, res.winner
        ),
    )
    .with_reports(vec![res.variance])];

    for (num, level) in [(1u64, 2u32), (3, 2)] {
        let t = DyadicRational::new(num, level)?;
        let xs: Vec<f64> = replicate(s.jump_seeds, |r| jump_at_lazy(m, t, &consts, replica_seed(seed, r)).expect("on grid"));
        let (v, se) = variance_and_se(&xs);
        let r = McReport::new(format!("Var jump of Z_{m} at {}", t.value()), s.jump_seeds, v, se)
            .with_target(jump_variance_truncated(level, m, &consts), "truncated jump variance");
        out.push(Check::from_report("AC7", b, r));
    }

    // refining the cascade moves the jump at 1/2 by the two new nodes only
    let half = DyadicRational::new(1, 1)?;
    let d: Vec<f64> = replicate(s.jump_seeds.min(20_000), |r| {
        let sd = replica_seed(seed ^ 0xABCD, r);
        jump_at_lazy(m + 1, half, &consts, sd).expect("grid") - jump_at_lazy(m, half, &consts, sd).expect("grid")
    });
    let sq: Vec<f64> = d.iter().map(|x| x * x).collect();
    let r = McReport::mean_of(format!("E(jump_{} - jump_{m})^2 at 1/2", m + 1), &sq)
        .with_target(2.0 * consts.kappa.powi(m as i32), "2 kappa^m");
    out.push(Check::from_report("aux", b, r));
    Ok(out)
}

fn variation_battery(s: &VerifySettings) -> Result<Vec<Check>> {
    let b = Battery::Variation;
    let consts = s.consts()?;
    let seed = s.battery_seed(b);
    let depths = &s.variation_depths;
    let pa = consts.p_alpha;
    let mut out = Vec::new();

    let above = variation_blowup(&consts, depths, pa + s.p_offset, s.variation_seeds, seed)?;
    let limit = 2.0 * consts.kappa.powf((pa + s.p_offset) / 2.0);
    let ok = above.ratios.iter().all(|r| (r.point / limit - 1.0).abs() <= 0.15 && r.point < 1.0);
    out.push(
        Check::new(
            "AC8",
            b,
            format!("p = p_alpha + {}: increments decay with ratio within 15% of 2 kappa^(p/2)", s.p_offset),
            ok,
            format!("ratios {:.4?} vs {limit:.4}", above.ratios.iter().map(|r| r.point).collect::<Vec<_>>()),
        )
        .with_reports(above.ratios.clone()),
    );

    let crit = variation_blowup(&consts, depths, pa, s.variation_seeds, seed)?;
    let (c_common, c_minimal) = stats::critical_slope(&consts);
    let greens = crit.increments.iter().filter(|r| r.verdict() == stats::Verdict::Green).count();
    let mut reports = crit.increments.clone();
    reports.push(McReport::new("slope of mean jump sum at p_alpha", s.variation_seeds, crit.slope, 0.0));
    out.push(
        Check::new(
            "AC8",
            b,
            "p = p_alpha: increments constant (each within 3 SE of the exact truncated increment)",
            greens == crit.increments.len(),
            format!(
                "increments {:.4?}; slope {:.4}; per-level constant {c_common:.4} (common-prefix reading) vs {c_minimal:.4} (minimal-level reading)",
                crit.increments.iter().map(|r| r.point).collect::<Vec<_>>(),
                crit.slope
            ),
        )
        .with_reports(reports),
    );

    let below = variation_blowup(&consts, depths, pa - s.p_offset, s.variation_seeds, seed)?;
    let grows = below.ratios.iter().all(|r| r.point - 3.0 * r.std_error > 1.0);
    out.push(
        Check::new(
            "AC8",
            b,
            format!("p = p_alpha - {}: increments grow geometrically", s.p_offset),
            grows,
            format!("ratios {:.4?}", below.ratios.iter().map(|r| r.point).collect::<Vec<_>>()),
        )
        .with_reports(below.ratios.clone()),
    );

    let quad = variation_blowup(&consts, &[*depths.last().expect("nonempty")], 2.0, s.variation_seeds, seed)?;
    out.push(Check::from_report("aux", b, quad.means[0].clone()));
    Ok(out)
}

fn modulus_battery(s: &VerifySettings) -> Result<Vec<Check>> {
    let b = Battery::Modulus;
    let consts = s.consts()?;
    let seed = s.battery_seed(b);
    let m = s.modulus_depth;
    let levels = &s.modulus_levels;
    let rows: Vec<Vec<stats::ModulusRow>> = replicate(s.modulus_seeds, |r| {
        let z = build_zm(m, &consts, replica_seed(seed, r)).expect("depth");
        modulus_profile(&z, &consts, levels).expect("levels below depth")
    });
    let (lo_c, hi_c) = modulus_bounds(&consts);
    let maxima: Vec<f64> = (0..levels.len()).map(|i| rows.iter().map(|r| r[i].normalized).fold(0.0, f64::max)).collect();
    let mut out = vec![Check::new(
        "AC9",
        b,
        format!("max over seeds of the normalised modulus lies in [2.0, 6.5], levels {levels:?}, m={m}"),
        maxima.iter().all(|&x| (2.0..=6.5).contains(&x)),
        format!("{maxima:.3?}; limsup constants {lo_c:.3} and {hi_c:.3}"),
    )];
    let monotone = rows.iter().all(|r| r.windows(2).all(|w| w[0].sup_increment_within >= w[1].sup_increment_within));
    out.push(Check::new(
        "aux",
        b,
        "sup increment over pairs with d_kappa <= kappa^L is nonincreasing in L",
        monotone,
        String::new(),
    ));

    let depths: Vec<u32> = (m.saturating_sub(6).max(2)..=m).collect();
    let z_seed = replica_seed(seed, 0);
    let est = |beta| -> Result<Vec<f64>> {
        depths.iter().map(|&d| holder_estimate(&build_zm(d, &consts, z_seed)?, &consts, beta)).collect()
    };
    let low = est(0.3)?;
    let high = est(0.7)?;
    out.push(Check::new(
        "aux",
        b,
        "Hölder ratio at beta = 0.3 stays bounded over depths",
        low.iter().fold(0.0, |a: f64, &b| a.max(b)) <= 1.25 * low[0],
        format!("{low:.3?}"),
    ));
    out.push(Check::new(
        "aux",
        b,
        "Hölder ratio at beta = 0.7 keeps growing over depths",
        high.windows(2).all(|w| w[1] > w[0]),
        format!("{high:.3?}"),
    ));
    Ok(out)
}
