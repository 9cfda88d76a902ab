//! Decompose Gaussian summary statistics — a sample mean and a (possibly
//! rank-deficient) sample covariance — into data matrices with independent
//! Gaussian rows, and from there into independent summary-statistic folds
//! that recombine exactly to the originals.
//!
//! The library side lives in [`linalg`], [`samplers`], [`thinning`],
//! [`glasso`], and [`stats_tests`]; the `wishart-thin` binary built from
//! [`cli`] exposes the verification harness and the cross-validation
//! application.

pub mod error;
pub mod linalg;
pub mod samplers;
pub mod thinning;

pub use error::{Error, Result};
