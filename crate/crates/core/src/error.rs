use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("covariance is not positive definite: smallest eigenvalue {min_eigenvalue:e} (largest {max_eigenvalue:e})")]
    NotPositiveDefinite {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("quad-lasso sub-problem did not converge for Monte-Carlo sample {sample} (kkt residual {kkt:e})")]
    SubproblemNotConverged { sample: usize, kkt: f64 },

    #[error("fully-sparse regime: every Monte-Carlo solution is identically zero, lambda = {lambda} exceeds the threshold where the estimator vanishes")]
    FullySparse { lambda: f64 },

    #[error("fixed-point iteration did not converge within {iterations} iterations (last residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        trace: Box<crate::replica::SolveTrace>,
    },

    #[error("coverage truth looks mis-scaled: mean |standardized residual| = {0:.3}")]
    ScaleMismatch(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
