//! Right-continuous piecewise-constant functions on [0, 1].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Càdlàg step function: `values[j]` holds on `[breakpoints[j], breakpoints[j+1])`,
/// the last piece extends to and includes 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "need one value per breakpoint, got {} breakpoints and {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::InvalidArgument("first breakpoint must be 0".into()));
        }
        if breakpoints.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) || *breakpoints.last().unwrap() > 1.0 {
            return Err(Error::InvalidArgument("breakpoints must increase strictly within [0, 1]".into()));
        }
        Ok(StepFunction { breakpoints, values })
    }

    pub fn constant(value: f64) -> Self {
        StepFunction { breakpoints: vec![0.0], values: vec![value] }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let j = self.breakpoints.partition_point(|&b| b <= t);
        self.values[j.saturating_sub(1)]
    }

    /// `(t, f(t) - f(t-))` at every interior breakpoint.
    pub fn jumps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values
            .windows(2)
            .zip(self.breakpoints.iter().skip(1))
            .map(|(w, &t)| (t, w[1] - w[0]))
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn inf(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Values at the left endpoints `i 2^-m` of the level-`m` dyadic grid.
    pub fn resample_dyadic(&self, m: u32) -> DyadicStepFunction {
        let pieces = 1usize << m;
        let values = (0..pieces).map(|i| self.value_at(i as f64 / pieces as f64)).collect();
        DyadicStepFunction { depth: m, values }
    }
}

/// Step function constant on `[i 2^-m, (i+1) 2^-m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicStepFunction {
    depth: u32,
    values: Vec<f64>,
}

impl DyadicStepFunction {
    pub fn new(depth: u32, values: Vec<f64>) -> Result<Self> {
        if depth >= usize::BITS || values.len() != 1usize << depth {
            return Err(Error::InvalidArgument(format!(
                "a depth-{depth} dyadic step function needs 2^{depth} values, got {}",
                values.len()
            )));
        }
        Ok(DyadicStepFunction { depth, values })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn pieces(&self) -> usize {
        self.values.len()
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let idx = ((t * self.pieces() as f64).floor() as usize).min(self.pieces() - 1);
        self.values[idx]
    }

    /// Jump `f(i 2^-m) - f(i 2^-m -)` entering piece `i >= 1`.
    pub fn jump_into(&self, piece: usize) -> f64 {
        self.values[piece] - self.values[piece - 1]
    }

    pub fn jumps(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.windows(2).map(|w| w[1] - w[0])
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_step_function(&self) -> StepFunction {
        let pieces = self.pieces() as f64;
        StepFunction {
            breakpoints: (0..self.pieces()).map(|i| i as f64 / pieces).collect(),
            values: self.values.clone(),
        }
    }
}
