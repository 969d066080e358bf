//! Law of `sup Z`: population dynamics for the max-type fixed point, and
//! the three-way comparison with cascade and algorithm suprema.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{mean, mean_and_se, replicate, McReport};
use crate::cascade::{build_zm, AlphaConstants};
use crate::engine::{normalization_scale, profile, sup_count, FindConfig};
use crate::error::{Error, Result};
use crate::seed::{replica_seed, StreamKey, DOMAIN_AUX};

pub const MIN_POPULATION: usize = 1000;
pub const DEFAULT_POPULATION: usize = 100_000;
pub const DEFAULT_GENERATIONS: u32 = 40;
pub const TAIL_POINTS: [f64; 3] = [1.0, 2.0, 3.0];

/// A finite sample standing in for the law of `sup Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupPopulation {
    pub consts: AlphaConstants,
    population: Vec<f64>,
    generation: u32,
}

impl SupPopulation {
    pub fn new(consts: AlphaConstants, population: Vec<f64>) -> Result<Self> {
        if population.len() < MIN_POPULATION {
            return Err(Error::InvalidArgument(format!(
                "population of {} is below the minimum {MIN_POPULATION}",
                population.len()
            )));
        }
        if population.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("population values must be finite".into()));
        }
        Ok(SupPopulation { consts, population, generation: 0 })
    }

    /// All-zero start, i.e. the law of `sup Z_0`.
    pub fn zeros(consts: AlphaConstants, size: usize) -> Result<Self> {
        Self::new(consts, vec![0.0; size])
    }

    /// `generations` steps from zero; generation `g` is the law of `sup Z_g`.
    pub fn converge(consts: AlphaConstants, size: usize, generations: u32, seed: u64) -> Result<Self> {
        let mut pop = Self::zeros(consts, size)?;
        for g in 0..generations {
            let mut rng = Self::generation_key(seed, g).rng();
            pop = sup_population_step(&pop, &mut rng);
        }
        Ok(pop)
    }

    pub fn generation_key(seed: u64, generation: u32) -> StreamKey {
        StreamKey::root(seed).child(DOMAIN_AUX).child(generation as u64)
    }

    pub fn population(&self) -> &[f64] {
        &self.population
    }

    pub fn generation(&self) -> u32 {
        self.generation
    }

    pub fn mean_report(&self) -> McReport {
        McReport::mean_of(format!("population mean, generation {}", self.generation), &self.population)
    }
}

/// One step of `S -> (sqrt(kappa) S' + N) v (sqrt(kappa) S'' - N)` with
/// parents drawn uniformly with replacement.
pub fn sup_population_step<R: Rng + ?Sized>(pop: &SupPopulation, rng: &mut R) -> SupPopulation {
    let root = pop.consts.kappa.sqrt();
    let size = pop.population.len();
    let next = (0..size)
        .map(|_| {
            let s0 = pop.population[rng.random_range(0..size)];
            let s1 = pop.population[rng.random_range(0..size)];
            let n: f64 = StandardNormal.sample(rng);
            (root * s0 + n).max(root * s1 - n)
        })
        .collect();
    SupPopulation { consts: pop.consts, population: next, generation: pop.generation + 1 }
}

/// `[sqrt(2/pi) / (1 - sqrt(kappa)), sqrt(2 / (1 - 2 kappa))]`.
pub fn sup_mean_bounds(consts: &AlphaConstants) -> (f64, f64) {
    let lower = (2.0 / std::f64::consts::PI).sqrt() / (1.0 - consts.kappa.sqrt());
    let upper = (2.0 / (1.0 - 2.0 * consts.kappa)).sqrt();
    (lower, upper)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub t: f64,
    pub empirical: f64,
    pub bound: f64,
}

impl TailRow {
    pub fn holds(&self) -> bool {
        self.empirical <= self.bound
    }
}

/// Empirical `P(|S - mean| >= t)` next to `2 exp(-(1-kappa) t^2 / 2)`.
pub fn sup_tail_check(pop: &SupPopulation, ts: &[f64]) -> Vec<TailRow> {
    let m = mean(&pop.population);
    let size = pop.population.len() as f64;
    ts.iter()
        .map(|&t| {
            let hits = pop.population.iter().filter(|&&s| (s - m).abs() >= t).count();
            TailRow { t, empirical: hits as f64 / size, bound: 2.0 * (-(1.0 - pop.consts.kappa) * t * t / 2.0).exp() }
        })
        .collect()
}

/// Inputs of the three-way supremum comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupSettings {
    pub n: u64,
    pub reps: u64,
    pub depth: u32,
    pub cascade_seeds: u64,
    pub population: usize,
    pub generations: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupConsistency {
    pub population: McReport,
    pub cascade: McReport,
    pub algorithm: McReport,
    /// Cascade minus population, against 0.
    pub cascade_gap: McReport,
    /// Algorithm minus population, against 0.
    pub algorithm_gap: McReport,
    pub bounds: (f64, f64),
}

/// Deterministic bound on `E sup Z - E sup Z_m`: beyond depth `m` every
/// level adds at most `kappa^{d/2} E max |N|` over `2^d` nodes.
pub fn truncation_budget(consts: &AlphaConstants, m: u32) -> f64 {
    let root = consts.kappa.sqrt();
    (m..m + 200)
        .map(|d| root.powi(d as i32) * (2.0 * (d as f64 + 1.0) * std::f64::consts::LN_2).sqrt())
        .sum()
}

pub fn sup_consistency(cfg: &FindConfig, settings: &SupSettings, seed: u64) -> Result<SupConsistency> {
    if settings.reps < 2 || settings.cascade_seeds < 2 {
        return Err(Error::InvalidArgument("need at least 2 replicas per estimator".into()));
    }
    let consts = AlphaConstants::new(cfg.rule.alpha)?;
    let key = StreamKey::root(seed);

    let pop = SupPopulation::converge(consts, settings.population, settings.generations, key.child(0).value())?;
    let population = pop.mean_report().with_target(consts_mid(&consts), "sup mean bounds midpoint");
    let (lo, hi) = sup_mean_bounds(&consts);
    let population = McReport { budget: (hi - lo) / 2.0, ..population };

    let cascade_seed = key.child(1).value();
    let cascade_sups: Vec<f64> = replicate(settings.cascade_seeds, |r| {
        build_zm(settings.depth, &consts, replica_seed(cascade_seed, r)).map(|z| z.sup())
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let cascade = McReport::mean_of(format!("sup Z_m, m={}", settings.depth), &cascade_sups);

    let algo_seed = key.child(2).value();
    let n = settings.n;
    let scale = normalization_scale(n, &cfg.rule);
    let algo_sups: Vec<f64> = replicate(settings.reps, |r| {
        let p = profile(n, cfg, replica_seed(algo_seed, r));
        (sup_count(&p) as f64 - 2.0 * n as f64) / scale
    });
    let algorithm = McReport::mean_of(format!("normalized sup X_n, n={n}"), &algo_sups);

    let gap = |est: &McReport, label: &str, budget: f64| {
        let se = (est.std_error.powi(2) + population.std_error.powi(2)).sqrt();
        McReport::new(label, est.samples, est.point - population.point, se)
            .with_target(0.0, "population-dynamics mean")
            .with_budget(budget)
    };
    let cascade_gap = gap(&cascade, "cascade sup - population", truncation_budget(&consts, settings.depth));
    let algorithm_gap = gap(&algorithm, "algorithm sup - population", truncation_budget(&consts, settings.depth));
    Ok(SupConsistency { population, cascade, algorithm, cascade_gap, algorithm_gap, bounds: (lo, hi) })
}

fn consts_mid(consts: &AlphaConstants) -> f64 {
    let (lo, hi) = sup_mean_bounds(consts);
    (lo + hi) / 2.0
}

/// Change of the mean under one further step, with joint standard error.
pub fn fixed_point_drift(pop: &SupPopulation, seed: u64) -> McReport {
    let mut rng = SupPopulation::generation_key(seed, pop.generation).rng();
    let next = sup_population_step(pop, &mut rng);
    let (a, sa) = mean_and_se(&pop.population);
    let (b, sb) = mean_and_se(&next.population);
    McReport::new("population mean drift over one step", pop.population.len() as u64, b - a, (sa * sa + sb * sb).sqrt())
        .with_target(0.0, "fixed point")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::constants;

    #[test]
    fn zero_population_gives_folded_normal() {
        let c = constants(0.5).unwrap();
        let pop = SupPopulation::zeros(c, 100_000).unwrap();
        let next = sup_population_step(&pop, &mut StreamKey::root(5).rng());
        let r = next.mean_report();
        assert_eq!(next.generation(), 1);
        assert!((r.point - (2.0 / std::f64::consts::PI).sqrt()).abs() < 3.0 * r.std_error);
    }

    #[test]
    fn rejects_small_population() {
        assert!(SupPopulation::zeros(constants(0.5).unwrap(), 10).is_err());
    }

    #[test]
    fn bounds_at_one_half() {
        let (lo, hi) = sup_mean_bounds(&constants(0.5).unwrap());
        assert!((lo - 1.968).abs() < 1e-3);
        assert!((hi - 2.613).abs() < 1e-3);
    }

    #[test]
    fn tail_bound_values() {
        let c = constants(0.5).unwrap();
        let pop = SupPopulation::converge(c, 5000, 20, 1).unwrap();
        let rows = sup_tail_check(&pop, &[0.0, 2.0, 3.0]);
        assert_eq!(rows[0].empirical, 1.0);
        assert_eq!(rows[0].bound, 2.0);
        assert!((rows[1].bound - 0.548_951_030_955_356_5).abs() < 1e-12);
        assert!((rows[2].bound - 0.109_059_403_194_110_74).abs() < 1e-12);
        assert!(rows.iter().all(TailRow::holds));
    }

    #[test]
    fn convergence_is_reproducible() {
        let c = constants(0.5).unwrap();
        let a = SupPopulation::converge(c, 2000, 5, 9).unwrap();
        let b = SupPopulation::converge(c, 2000, 5, 9).unwrap();
        assert_eq!(a, b);
    }
}
