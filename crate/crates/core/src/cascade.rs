//! The Gaussian limit process, truncated at a finite depth, and its closed-form
//! second-order structure.
//!
//! `Z_m(t) = sum_{|theta| < m} (1/2)^{(1-alpha/2)|theta|} (1{t in B_theta0} - 1{t in B_theta1}) N_theta`
//! where `B_theta` is the set of points whose binary expansion starts with
//! `theta`. Node normals are generated from `(seed, theta)` on demand.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{StreamKey, DOMAIN_CASCADE};
use crate::step::DyadicStepFunction;

pub const DEFAULT_DEPTH: u32 = 16;
pub const MAX_DEPTH: u32 = 24;

/// Constants derived from `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaConstants {
    pub alpha: f64,
    /// `(1/2)^{2-alpha}`
    pub kappa: f64,
    /// `(4 - 2 kappa) / (1 - kappa)`
    pub gamma: f64,
    /// `2 / (2 - alpha)`
    pub p_alpha: f64,
}

impl AlphaConstants {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 0.5) {
            return Err(Error::AlphaOutOfRange(alpha));
        }
        let kappa = 0.5f64.powf(2.0 - alpha);
        Ok(AlphaConstants {
            alpha,
            kappa,
            gamma: (4.0 - 2.0 * kappa) / (1.0 - kappa),
            p_alpha: 2.0 / (2.0 - alpha),
        })
    }

    /// Per-level coefficient `(1/2)^{1-alpha/2} = sqrt(kappa)`.
    pub fn level_coefficient(&self) -> f64 {
        0.5f64.powf(1.0 - self.alpha / 2.0)
    }

    /// `Var Z(t) = 1 / (1 - kappa)`.
    pub fn marginal_variance(&self) -> f64 {
        1.0 / (1.0 - self.kappa)
    }

    /// `kappa^j` with `kappa^inf = 0`.
    pub fn kappa_pow(&self, j: PrefixLen) -> f64 {
        match j {
            PrefixLen::Finite(j) => self.kappa.powi(j as i32),
            PrefixLen::Infinite => 0.0,
        }
    }
}

pub fn constants(alpha: f64) -> Result<AlphaConstants> {
    AlphaConstants::new(alpha)
}

/// `numerator / 2^level` in `[0, 1]`, kept in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicRational {
    numerator: u64,
    level: u32,
}

/// Level used when snapping reals onto the dyadic grid.
pub const SNAP_LEVEL: u32 = 53;

impl DyadicRational {
    pub fn new(numerator: u64, level: u32) -> Result<Self> {
        if level > 62 || numerator > (1u64 << level) {
            return Err(Error::InvalidDyadic { numerator, level });
        }
        let (mut num, mut lvl) = (numerator, level);
        while lvl > 0 && num % 2 == 0 {
            num /= 2;
            lvl -= 1;
        }
        if num == 0 {
            lvl = 0;
        }
        Ok(DyadicRational { numerator: num, level: lvl })
    }

    /// Truncates `t` to the level-53 grid; `1.0` maps to one.
    pub fn snap(t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidArgument(format!("{t} is outside [0, 1]")));
        }
        if t == 1.0 {
            return Ok(DyadicRational { numerator: 1, level: 0 });
        }
        let scaled = (t * (1u64 << SNAP_LEVEL) as f64).floor() as u64;
        DyadicRational::new(scaled, SNAP_LEVEL)
    }

    pub fn numerator(&self) -> u64 {
        self.numerator
    }

    /// Minimal `i` with the value in `i`-th level grid.
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn is_one(&self) -> bool {
        self.numerator == 1 && self.level == 0
    }

    pub fn value(&self) -> f64 {
        self.numerator as f64 / (1u64 << self.level) as f64
    }

    fn numerator_at(&self, level: u32) -> u64 {
        self.numerator << (level - self.level)
    }
}

/// Length of a longest common binary prefix; infinite for equal points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PrefixLen {
    Finite(u32),
    Infinite,
}

impl PrefixLen {
    pub fn finite(self) -> Option<u32> {
        match self {
            PrefixLen::Finite(j) => Some(j),
            PrefixLen::Infinite => None,
        }
    }
}

impl std::fmt::Display for PrefixLen {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PrefixLen::Finite(j) => write!(f, "{j}"),
            PrefixLen::Infinite => f.write_str("inf"),
        }
    }
}

/// Common prefix length of the binary expansions of `s` and `t`.
///
/// Expansions never end in all ones, except for `1 = 0.111...` itself.
pub fn prefix_len(s: DyadicRational, t: DyadicRational) -> PrefixLen {
    if s == t {
        return PrefixLen::Infinite;
    }
    let level = s.level.max(t.level).max(1);
    match (s.is_one(), t.is_one()) {
        (true, false) => PrefixLen::Finite(leading_ones(t.numerator_at(level), level)),
        (false, true) => PrefixLen::Finite(leading_ones(s.numerator_at(level), level)),
        _ => {
            let diff = s.numerator_at(level) ^ t.numerator_at(level);
            PrefixLen::Finite(level - (u64::BITS - diff.leading_zeros()))
        }
    }
}

fn leading_ones(numerator: u64, level: u32) -> u32 {
    // the expansion continues with zeros beyond `level`
    let shifted = numerator << (u64::BITS - level);
    shifted.leading_ones().min(level)
}

/// Prefix length for real arguments, after snapping both to the level-53 grid.
pub fn prefix_len_real(s: f64, t: f64) -> Result<PrefixLen> {
    Ok(prefix_len(DyadicRational::snap(s)?, DyadicRational::snap(t)?))
}

/// `E Z(s) Z(t) = (kappa^{j+1} - 2 kappa^j + 1) / (1 - kappa)`.
pub fn covariance(j: PrefixLen, consts: &AlphaConstants) -> f64 {
    let kj = consts.kappa_pow(j);
    (consts.kappa * kj - 2.0 * kj + 1.0) / (1.0 - consts.kappa)
}

/// `E (Z(t) - Z(s))^2 = gamma kappa^j`.
pub fn increment_msq(j: PrefixLen, consts: &AlphaConstants) -> f64 {
    consts.gamma * consts.kappa_pow(j)
}

/// Ultrametric `d_kappa(s, t) = kappa^j`.
pub fn d_kappa(j: PrefixLen, consts: &AlphaConstants) -> f64 {
    consts.kappa_pow(j)
}

/// Covariance of `Z_m`: the depth-`m` truncation of [`covariance`].
pub fn covariance_truncated(j: PrefixLen, m: u32, consts: &AlphaConstants) -> f64 {
    let k = consts.kappa;
    match j {
        PrefixLen::Finite(j) if j < m => {
            (1.0 - k.powi(j as i32)) / (1.0 - k) - k.powi(j as i32)
        }
        _ => (1.0 - k.powi(m as i32)) / (1.0 - k),
    }
}

/// Two readings of the exponent in the jump law at a dyadic point of minimal
/// level `i`: `Var dZ(t) = gamma kappa^i` or `gamma kappa^{i-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JumpIndexReading {
    /// Exponent equals the minimal level `i`.
    MinimalLevel,
    /// Exponent equals the common prefix length `i - 1` of `t-` and `t`.
    CommonPrefix,
}

/// Reading confirmed by the Monte Carlo jump-variance oracle (see the
/// `jump` verification battery): at `t = 1/2` the empirical variance is
/// `gamma`, not `gamma kappa`.
pub const JUMP_INDEX_READING: JumpIndexReading = JumpIndexReading::CommonPrefix;

/// Jump variance at a point of minimal level `level >= 1` under `reading`.
pub fn jump_variance(level: u32, consts: &AlphaConstants, reading: JumpIndexReading) -> f64 {
    let exponent = match reading {
        JumpIndexReading::MinimalLevel => level,
        JumpIndexReading::CommonPrefix => level - 1,
    };
    consts.gamma * consts.kappa.powi(exponent as i32)
}

/// Exact jump variance of `Z_m` at a point of minimal level `level <= m`.
///
/// The node on the common prefix flips sign (`4 kappa^{i-1}`); every node
/// below it on the two sides contributes once (`2 sum_{d=i}^{m-1} kappa^d`).
pub fn jump_variance_truncated(level: u32, m: u32, consts: &AlphaConstants) -> f64 {
    let k = consts.kappa;
    let i = level as i32;
    let tail = k.powi(i) * (1.0 - k.powi(m as i32 - i)) / (1.0 - k);
    4.0 * k.powi(i - 1) + 2.0 * tail
}

/// Position of a tree node: depth and index in lexicographic order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeLabel {
    pub depth: u32,
    pub index: u64,
}

impl NodeLabel {
    fn heap_index(self) -> u64 {
        (1u64 << self.depth) | self.index
    }
}

/// `N_theta` of the cascade with the given seed.
pub fn node_normal(seed: u64, label: NodeLabel) -> f64 {
    let key = StreamKey::root(seed).child(DOMAIN_CASCADE).child(label.heap_index());
    StandardNormal.sample(&mut key.rng())
}

/// The `2^m - 1` normals of a depth-`m` cascade, in breadth-first order.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianCascade {
    seed: u64,
    depth: u32,
    normals: Vec<f64>,
}

impl GaussianCascade {
    pub fn generate(seed: u64, depth: u32) -> Result<Self> {
        check_depth(depth)?;
        let mut normals = Vec::with_capacity((1usize << depth) - 1);
        for d in 0..depth {
            for index in 0..(1u64 << d) {
                normals.push(node_normal(seed, NodeLabel { depth: d, index }));
            }
        }
        Ok(GaussianCascade { seed, depth, normals })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.normals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }

    pub fn normal(&self, label: NodeLabel) -> f64 {
        self.normals[(label.heap_index() - 1) as usize]
    }

    /// Level-by-level prefix accumulation; `O(2^m)`.
    pub fn path(&self, consts: &AlphaConstants) -> DyadicStepFunction {
        self.truncated_path(self.depth, consts).expect("own depth")
    }

    /// `Z_d` for `d <= depth`, built from the same normals.
    pub fn truncated_path(&self, depth: u32, consts: &AlphaConstants) -> Result<DyadicStepFunction> {
        if depth == 0 || depth > self.depth {
            return Err(Error::DepthOutOfRange { depth, max: self.depth });
        }
        let coef = consts.level_coefficient();
        let mut values = vec![0.0];
        let mut scale = 1.0;
        for d in 0..depth {
            let offset = (1usize << d) - 1;
            let mut next = Vec::with_capacity(values.len() * 2);
            for (j, &v) in values.iter().enumerate() {
                let term = scale * self.normals[offset + j];
                next.push(v + term);
                next.push(v - term);
            }
            values = next;
            scale *= coef;
        }
        Ok(DyadicStepFunction::new(depth, values).expect("2^m values"))
    }
}

fn check_depth(depth: u32) -> Result<()> {
    if depth == 0 || depth > MAX_DEPTH {
        return Err(Error::DepthOutOfRange { depth, max: MAX_DEPTH });
    }
    Ok(())
}

/// Sample path of `Z_m` for the given seed.
pub fn build_zm(m: u32, consts: &AlphaConstants, seed: u64) -> Result<DyadicStepFunction> {
    Ok(GaussianCascade::generate(seed, m)?.path(consts))
}

/// `Z_m` on piece `piece`, summing only its `m` ancestors.
pub fn eval_piece(m: u32, piece: u64, consts: &AlphaConstants, seed: u64) -> f64 {
    let coef = consts.level_coefficient();
    let mut scale = 1.0;
    let mut acc = 0.0;
    for d in 0..m {
        let index = piece >> (m - d);
        let goes_right = (piece >> (m - d - 1)) & 1 == 1;
        let term = scale * node_normal(seed, NodeLabel { depth: d, index });
        acc += if goes_right { -term } else { term };
        scale *= coef;
    }
    acc
}

/// `f(t) - f(t-)` for `t` on the path's grid, `0 < t < 1`.
pub fn jump_at(z: &DyadicStepFunction, t: DyadicRational) -> Result<f64> {
    if t.numerator == 0 || t.is_one() || t.level > z.depth() {
        return Err(Error::OffGrid(format!("{}/2^{}", t.numerator, t.level)));
    }
    let piece = (t.numerator << (z.depth() - t.level)) as usize;
    Ok(z.jump_into(piece))
}

/// Jump of `Z_m` at `t` using only the ancestors of the two adjacent pieces.
pub fn jump_at_lazy(m: u32, t: DyadicRational, consts: &AlphaConstants, seed: u64) -> Result<f64> {
    if t.numerator == 0 || t.is_one() || t.level > m {
        return Err(Error::OffGrid(format!("{}/2^{}", t.numerator, t.level)));
    }
    let piece = t.numerator << (m - t.level);
    Ok(eval_piece(m, piece, consts, seed) - eval_piece(m, piece - 1, consts, seed))
}

/// One application of the fixed-point map: two depth-`(m-1)` paths glued on
/// the halves of `[0, 1]`, scaled by `sqrt(kappa)`, plus `N * sg`.
pub fn glue(left: &DyadicStepFunction, right: &DyadicStepFunction, normal: f64, consts: &AlphaConstants) -> DyadicStepFunction {
    assert_eq!(left.depth(), right.depth());
    let coef = consts.level_coefficient();
    let values = left
        .values()
        .iter()
        .map(|&v| coef * v + normal)
        .chain(right.values().iter().map(|&v| coef * v - normal))
        .collect();
    DyadicStepFunction::new(left.depth() + 1, values).expect("two halves")
}
