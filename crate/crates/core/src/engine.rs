//! Instrumented median-of-k(n) FIND.
//!
//! Keys are the ranks `1..=n` themselves. A recursion node is identified by
//! its address in the partition tree (root, then one bit per step: 0 for the
//! left block, 1 for the right block), and draws its subsample and its median
//! selection randomness from the stream keyed by that address. A single-rank
//! run and the all-ranks profile therefore follow identical partitions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pivot::{median_select, sample_subset, MedianStrategy, SubsampleRule};
use crate::seed::{StreamKey, DOMAIN_FIND};
use crate::step::StepFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Partition into `S_<=` (pivot included) and `S_>`; never stops early.
    TwoVersion,
    /// Partition into `S_<`, `{p}`, `S_>`; stops when the pivot is the target.
    ThreeVersion,
}

impl Variant {
    pub fn code(self) -> u8 {
        match self {
            Variant::TwoVersion => 2,
            Variant::ThreeVersion => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            2 => Some(Variant::TwoVersion),
            3 => Some(Variant::ThreeVersion),
            _ => None,
        }
    }
}

/// Everything that determines the algorithm apart from `n` and the seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FindConfig {
    pub variant: Variant,
    pub rule: SubsampleRule,
    pub strategy: MedianStrategy,
}

impl FindConfig {
    pub fn new(variant: Variant, rule: SubsampleRule) -> Self {
        FindConfig { variant, rule, strategy: MedianStrategy::default() }
    }

    pub fn with_strategy(mut self, strategy: MedianStrategy) -> Self {
        self.strategy = strategy;
        self
    }
}

/// Outcome of partitioning one node of `size >= 2` keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeSplit {
    /// `size - k + T`: partition comparisons plus median comparisons.
    pub toll: u64,
    /// Rank of the pivot within the node, in `1..=size`.
    pub pivot: u64,
}

/// Partition a node of `size >= 2` keys, using the stream at `address`.
pub fn split_node(size: u64, address: StreamKey, rule: &SubsampleRule, strategy: MedianStrategy) -> NodeSplit {
    debug_assert!(size >= 2);
    let k = rule.k_of(size);
    let mut rng = address.rng();
    let mut subsample = sample_subset(size, k, &mut rng);
    let (pivot, cost) = median_select(&mut subsample, strategy, &mut rng).expect("k(n) is odd");
    NodeSplit { toll: size - k + cost.comparisons, pivot }
}

fn root_address(seed: u64) -> StreamKey {
    StreamKey::root(seed).child(DOMAIN_FIND)
}

/// Key comparisons used to select rank `rank` out of `n` keys.
pub fn run_find(n: u64, rank: u64, cfg: &FindConfig, seed: u64) -> Result<u64> {
    if n == 0 || rank == 0 || rank > n {
        return Err(Error::RankOutOfRange { rank, n });
    }
    let (mut lo, mut hi, mut address) = (1u64, n, root_address(seed));
    let mut total = 0u64;
    while hi > lo {
        let split = split_node(hi - lo + 1, address, &cfg.rule, cfg.strategy);
        total += split.toll;
        let p = lo + split.pivot - 1;
        match cfg.variant {
            Variant::ThreeVersion => {
                if rank == p {
                    break;
                }
                if rank < p {
                    hi = p - 1;
                    address = address.child(0);
                } else {
                    lo = p + 1;
                    address = address.child(1);
                }
            }
            Variant::TwoVersion => {
                if rank <= p {
                    hi = p;
                    address = address.child(0);
                } else {
                    lo = p + 1;
                    address = address.child(1);
                }
            }
        }
    }
    Ok(total)
}

/// Per-rank comparison counts of one run, `counts[l-1] = X_n(l)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityProfile {
    pub n: u64,
    pub counts: Vec<u64>,
    pub variant: Variant,
    pub rule: SubsampleRule,
    pub strategy: MedianStrategy,
    pub seed: u64,
}

impl ComplexityProfile {
    pub fn count(&self, rank: u64) -> u64 {
        self.counts[(rank - 1) as usize]
    }
}

/// All ranks at once: every node adds its toll to the ranks it covers.
///
/// Iterative over an explicit stack of rank intervals; tolls are accumulated
/// in a difference array, so the cost is linear in the number of nodes plus
/// the subsample work.
pub fn profile(n: u64, cfg: &FindConfig, seed: u64) -> ComplexityProfile {
    let parts = profile_breakdown(n, cfg, seed);
    let counts = parts.partition.iter().zip(&parts.median).map(|(a, b)| a + b).collect();
    ComplexityProfile { n, counts, variant: cfg.variant, rule: cfg.rule, strategy: cfg.strategy, seed }
}

/// Per-rank comparison counts split by where they were spent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TollBreakdown {
    /// `sum (n' - k(n'))` over the nodes covering each rank.
    pub partition: Vec<u64>,
    /// Comparisons spent selecting subsample medians.
    pub median: Vec<u64>,
}

pub fn profile_breakdown(n: u64, cfg: &FindConfig, seed: u64) -> TollBreakdown {
    assert!(n >= 1, "profile needs n >= 1");
    let len = n as usize;
    let mut diff_part = vec![0i64; len + 1];
    let mut diff_med = vec![0i64; len + 1];
    let mut stack = vec![(1u64, n, root_address(seed))];
    while let Some((lo, hi, address)) = stack.pop() {
        if hi <= lo {
            continue;
        }
        let size = hi - lo + 1;
        let split = split_node(size, address, &cfg.rule, cfg.strategy);
        let part = (size - cfg.rule.k_of(size)) as i64;
        let med = split.toll as i64 - part;
        diff_part[(lo - 1) as usize] += part;
        diff_part[hi as usize] -= part;
        diff_med[(lo - 1) as usize] += med;
        diff_med[hi as usize] -= med;
        let p = lo + split.pivot - 1;
        match cfg.variant {
            Variant::ThreeVersion => {
                if p > lo {
                    stack.push((lo, p - 1, address.child(0)));
                }
                if p < hi {
                    stack.push((p + 1, hi, address.child(1)));
                }
            }
            Variant::TwoVersion => {
                stack.push((lo, p, address.child(0)));
                if p < hi {
                    stack.push((p + 1, hi, address.child(1)));
                }
            }
        }
    }
    let prefix = |diff: &[i64]| -> Vec<u64> {
        let mut acc = 0i64;
        diff[..len]
            .iter()
            .map(|d| {
                acc += d;
                acc as u64
            })
            .collect()
    };
    TollBreakdown { partition: prefix(&diff_part), median: prefix(&diff_med) }
}

/// Scale `n^{1-alpha/2} / sqrt(c)` of the fluctuations around `2n`.
pub fn normalization_scale(n: u64, rule: &SubsampleRule) -> f64 {
    (n as f64).powf(1.0 - rule.alpha / 2.0) / rule.c.sqrt()
}

/// Rank read off at time `t`: `floor(t n) + 1`, with rank `n + 1` mapped to `n`.
pub fn rank_at(n: u64, t: f64) -> u64 {
    (((t * n as f64).floor() as u64) + 1).clamp(1, n)
}

/// `Y_n(t) = (X_n(floor(tn)+1) - 2n) / (n^{1-alpha/2}/sqrt(c))` as a step function.
pub fn normalize(p: &ComplexityProfile, rule: &SubsampleRule) -> StepFunction {
    let n = p.n as f64;
    let scale = normalization_scale(p.n, rule);
    let breakpoints = (0..p.n).map(|l| l as f64 / n).collect();
    let values = p.counts.iter().map(|&x| (x as f64 - 2.0 * n) / scale).collect();
    StepFunction::new(breakpoints, values).expect("ranks give increasing breakpoints")
}

/// Worst case over ranks.
pub fn sup_count(p: &ComplexityProfile) -> u64 {
    p.counts.iter().copied().max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(variant: Variant) -> FindConfig {
        FindConfig::new(variant, SubsampleRule::new(1.0, 0.5).unwrap())
    }

    #[test]
    fn single_key_costs_nothing() {
        for v in [Variant::TwoVersion, Variant::ThreeVersion] {
            assert_eq!(run_find(1, 1, &cfg(v), 9).unwrap(), 0);
            assert_eq!(profile(1, &cfg(v), 9).counts, vec![0]);
        }
    }

    #[test]
    fn two_keys_three_version() {
        // k(2) = 1. Root toll 1; either the pivot is the target, or the
        // target is alone in a size-1 block that costs nothing.
        for seed in 0..100 {
            assert_eq!(run_find(2, 1, &cfg(Variant::ThreeVersion), seed).unwrap(), 1);
        }
    }

    #[test]
    fn forced_full_subsample() {
        // c large: k(3) = 3, pivot is always rank 2, toll = 0 + T_3.
        let rule = SubsampleRule::with_floor(100.0, 0.5, 2).unwrap();
        let cfg = FindConfig::new(Variant::ThreeVersion, rule);
        for seed in 0..50 {
            let p = profile(3, &cfg, seed);
            assert!(p.counts.iter().all(|&c| c == p.counts[0]));
            assert!(p.counts[0] <= 3);
        }
    }

    #[test]
    fn rank_out_of_range() {
        assert!(run_find(5, 0, &cfg(Variant::TwoVersion), 1).is_err());
        assert!(run_find(5, 6, &cfg(Variant::TwoVersion), 1).is_err());
    }

    #[test]
    fn profile_matches_single_rank_runs() {
        for v in [Variant::TwoVersion, Variant::ThreeVersion] {
            for seed in 0..5 {
                let p = profile(200, &cfg(v), seed);
                for l in 1..=200 {
                    assert_eq!(p.count(l), run_find(200, l, &cfg(v), seed).unwrap());
                }
            }
        }
    }

    #[test]
    fn breakdown_adds_up() {
        for v in [Variant::TwoVersion, Variant::ThreeVersion] {
            let b = profile_breakdown(300, &cfg(v), 4);
            let p = profile(300, &cfg(v), 4);
            for l in 0..300 {
                assert_eq!(b.partition[l] + b.median[l], p.counts[l]);
            }
        }
    }

    #[test]
    fn toll_floor() {
        let rule = SubsampleRule::new(1.0, 0.5).unwrap();
        for v in [Variant::TwoVersion, Variant::ThreeVersion] {
            for &n in &[2u64, 5, 17, 1000] {
                let p = profile(n, &cfg(v), 3);
                assert!(p.counts.iter().all(|&c| c >= n - rule.k_of(n)));
            }
        }
    }

    #[test]
    fn normalize_examples() {
        let rule = SubsampleRule::new(1.0, 0.5).unwrap();
        let p = ComplexityProfile {
            n: 4,
            counts: vec![8, 9, 9, 8],
            variant: Variant::TwoVersion,
            rule,
            strategy: MedianStrategy::RandomizedSelect,
            seed: 0,
        };
        let y = normalize(&p, &rule);
        let s = 4f64.powf(0.75);
        assert_eq!(y.breakpoints(), &[0.0, 0.25, 0.5, 0.75]);
        assert_eq!(y.values(), &[0.0, 1.0 / s, 1.0 / s, 0.0]);
        assert_eq!(y.value_at(1.0), y.value_at(0.75));

        let flat = ComplexityProfile { counts: vec![8; 4], ..p };
        assert!(normalize(&flat, &rule).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sup_count_basics() {
        let p = profile(1, &cfg(Variant::ThreeVersion), 0);
        assert_eq!(sup_count(&p), 0);
        let p = profile(500, &cfg(Variant::ThreeVersion), 0);
        assert!(sup_count(&p) >= p.counts[0]);
    }

    #[test]
    fn rank_at_convention() {
        assert_eq!(rank_at(10, 0.0), 1);
        assert_eq!(rank_at(10, 0.95), 10);
        assert_eq!(rank_at(10, 1.0), 10);
    }
}
