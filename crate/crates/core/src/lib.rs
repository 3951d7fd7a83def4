//! Asymptotic analysis and de-biased inference for L1-regularized convex
//! classifiers trained on two-component Gaussian mixtures.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifier;
pub mod covariance;
pub mod error;
pub mod experiments;
pub mod inference;
pub mod loss;
pub mod mixture;
pub mod normal;
pub mod output;
pub mod quadrature;
pub mod replica;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
