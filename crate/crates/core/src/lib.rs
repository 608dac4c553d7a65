//! Estimation and inference for two distributions under a likelihood ratio
//! (density ratio) order.
//!
//! The entry point is [`estimators::fit_lro`], which returns the maximum
//! likelihood estimates of both distribution functions and of their
//! non-decreasing density ratio. [`inference`] builds pointwise confidence
//! intervals for the ratio and [`simulation`] runs Monte Carlo studies.

// `!(a < b)` is used on purpose to reject NaN alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod inference;
pub mod isotonic;
pub mod rng;
pub mod simulation;

pub use error::{LroError, Result};
pub use estimators::{fit_lro, LroFit, TwoSample};
