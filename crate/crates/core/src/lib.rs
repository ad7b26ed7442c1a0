//! Logistic regression that stays well defined when the data are separated.
//!
//! The crate detects complete and quasi-complete separation with a linear
//! program, fits the limiting conditional model, computes one-sided
//! confidence intervals for mean-value parameters of problematic points and
//! predicts new points by averaging two augmented fits.

pub mod baselines;
pub mod bench;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod inference;
mod linalg;
pub mod lp;
pub mod model;
pub mod predict;
pub mod separation;

pub use dataset::Dataset;
pub use error::{Error, Result};
pub use model::{fit_irls, FitConfig, FitResult};
pub use separation::{detect, fit_completion, SeparationKind, SeparationReport};
