//! Simulation and statistical verification of median-of-k(n) FIND.
//!
//! * [`pivot`]: subsample sizes, the pivot-rank law, counted median selection.
//! * [`engine`]: the 2- and 3-version FIND with per-rank comparison profiles.
//! * [`cascade`]: the Gaussian limit process truncated at finite depth.
//! * [`stats`]: Monte Carlo estimators and tests tying the two together.
//! * [`verify`]: verification batteries with pass/fail verdicts.

pub mod cascade;
pub mod engine;
pub mod error;
pub mod io;
pub mod pivot;
pub mod seed;
pub mod stats;
pub mod step;
pub mod verify;

pub use error::{Error, Result};
