//! De-biased estimator, per-coordinate tests and intervals, and the empirical
//! precision, coverage and power metrics.
//!
//! ```text
//! w̄ = ŵ − 1/(√p·ζ) · Σᵢ yᵢ·V'(yᵢ·xᵢᵀŵ/√p)·Σ^{-1}xᵢ
//! ```
//!
//! Coordinate `j` of `w̄` is treated as normal with standard deviation
//! `τ·√((Σ^{-1})_jj)`, with `ζ` and `τ` taken from the replica solve.

use std::path::Path;

use nalgebra::DVector;

use crate::classifier::margins;
use crate::covariance::CovarianceFactors;
use crate::error::{Error, Result};
use crate::loss::LossModel;
use crate::mixture::Dataset;
use crate::normal;
use crate::output::{self, fmt_float};

pub fn debias(
    w_hat: &DVector<f64>,
    dataset: &Dataset,
    loss: LossModel,
    factors: &CovarianceFactors,
    zeta: f64,
) -> Result<DVector<f64>> {
    if factors.dim() != dataset.p() {
        return Err(Error::Dimension(format!(
            "covariance has p = {} but the data have p = {}",
            factors.dim(),
            dataset.p()
        )));
    }
    if !(zeta > 0.0 && zeta.is_finite()) {
        return Err(Error::Parameter(format!(
            "zeta must be positive, got {zeta}"
        )));
    }
    let m = margins(dataset, w_hat)?;
    let r = DVector::from_fn(dataset.n(), |i, _| dataset.y[i] * loss.derivative(m[i]));
    let g = dataset.x.transpose() * r;
    let correction = if factors.is_diagonal() {
        g.component_mul(factors.inv_diag())
    } else {
        factors.inv_sigma() * g
    };
    Ok(w_hat - correction / ((dataset.p() as f64).sqrt() * zeta))
}

/// Two-sided normal p-value of `H₀: w_j = 0`.
pub fn p_value(w_bar_j: f64, tau: f64, inv_diag_j: f64) -> f64 {
    (2.0 * normal::sf((w_bar_j / (tau * inv_diag_j.sqrt())).abs())).min(1.0)
}

/// `w̄_j ∓ z*·τ·√((Σ^{-1})_jj)` with `z* = Φ^{-1}(1 − level/2)`.
pub fn confidence_interval(w_bar_j: f64, tau: f64, inv_diag_j: f64, level: f64) -> (f64, f64) {
    let half = normal::two_sided_critical(level) * tau * inv_diag_j.sqrt();
    (w_bar_j - half, w_bar_j + half)
}

/// Per-coordinate tests for one fitted dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct InferenceReport {
    pub w_hat: DVector<f64>,
    pub w_bar: DVector<f64>,
    pub tau: f64,
    pub std_err: DVector<f64>,
    pub p_values: DVector<f64>,
    pub ci_lower: DVector<f64>,
    pub ci_upper: DVector<f64>,
    pub rejected: Vec<bool>,
    pub level: f64,
}

impl InferenceReport {
    pub fn new(
        w_hat: DVector<f64>,
        w_bar: DVector<f64>,
        tau: f64,
        inv_diag: &DVector<f64>,
        level: f64,
    ) -> Result<Self> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::Parameter(format!(
                "level must lie in (0, 1), got {level}"
            )));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Parameter(format!("tau must be positive, got {tau}")));
        }
        let p = w_bar.len();
        if w_hat.len() != p || inv_diag.len() != p {
            return Err(Error::Dimension(
                "w_hat, w_bar and inv_diag must have equal length".into(),
            ));
        }
        let std_err = inv_diag.map(|d| tau * d.sqrt());
        let mut p_values = DVector::zeros(p);
        let mut ci_lower = DVector::zeros(p);
        let mut ci_upper = DVector::zeros(p);
        let mut rejected = vec![false; p];
        for j in 0..p {
            let (lo, hi) = confidence_interval(w_bar[j], tau, inv_diag[j], level);
            let reject = lo > 0.0 || hi < 0.0;
            // the interval and the p-value agree up to rounding; at an exact
            // boundary the interval decides and the p-value is moved onto the
            // matching side of `level`
            let mut pv = p_value(w_bar[j], tau, inv_diag[j]);
            if reject && pv >= level {
                pv = level.next_down();
            } else if !reject && pv < level {
                pv = level;
            }
            p_values[j] = pv;
            ci_lower[j] = lo;
            ci_upper[j] = hi;
            rejected[j] = reject;
        }
        Ok(Self {
            w_hat,
            w_bar,
            tau,
            std_err,
            p_values,
            ci_lower,
            ci_upper,
            rejected,
            level,
        })
    }

    pub fn len(&self) -> usize {
        self.w_bar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w_bar.is_empty()
    }

    pub fn covers(&self, j: usize, value: f64) -> bool {
        self.ci_lower[j] <= value && value <= self.ci_upper[j]
    }

    /// `(w̄_j − truth_j)/se_j`.
    pub fn standardized(&self, truth: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.len(), |j, _| {
            (self.w_bar[j] - truth[j]) / self.std_err[j]
        })
    }

    /// Whether the three decision forms agree on every coordinate.
    pub fn representations_agree(&self) -> bool {
        (0..self.len()).all(|j| {
            let by_p = self.p_values[j] < self.level;
            let by_ci = !self.covers(j, 0.0);
            by_p == by_ci && by_ci == self.rejected[j]
        })
    }

    /// CSV with one row per coordinate.
    pub fn write_csv(&self, path: &Path, truth: &DVector<f64>) -> Result<()> {
        if truth.len() != self.len() {
            return Err(Error::Dimension(
                "truth length differs from the report".into(),
            ));
        }
        let mut w = output::writer(path)?;
        w.write_record([
            "coordinate",
            "w_hat",
            "w_bar",
            "std_err",
            "p_value",
            "ci_lower",
            "ci_upper",
            "truth",
            "rejected",
        ])?;
        for j in 0..self.len() {
            w.write_record([
                (j + 1).to_string(),
                fmt_float(self.w_hat[j]),
                fmt_float(self.w_bar[j]),
                fmt_float(self.std_err[j]),
                fmt_float(self.p_values[j]),
                fmt_float(self.ci_lower[j]),
                fmt_float(self.ci_upper[j]),
                fmt_float(truth[j]),
                self.rejected[j].to_string(),
            ])?;
        }
        output::finish(w, path)
    }
}

/// Empirical rates next to their limiting values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExperimentMetrics {
    pub empirical_precision: f64,
    pub empirical_coverage: f64,
    pub empirical_power: f64,
    pub theoretical_precision: f64,
    pub theoretical_coverage: f64,
    pub theoretical_power: f64,
}

/// Fraction of rows with `y·xᵀw > 0`; ties count as errors.
pub fn empirical_precision(w: &DVector<f64>, test: &Dataset) -> Result<f64> {
    if test.n() == 0 {
        return Err(Error::Parameter("empty test set".into()));
    }
    let m = margins(test, w)?;
    Ok(m.iter().filter(|&&v| v > 0.0).count() as f64 / test.n() as f64)
}

/// Fraction of (replicate, coordinate) pairs whose interval contains `truth`.
pub fn empirical_coverage(reports: &[InferenceReport], truth: &DVector<f64>) -> Result<f64> {
    if reports.is_empty() {
        return Err(Error::Parameter("no reports".into()));
    }
    let p = truth.len();
    if reports.iter().any(|r| r.len() != p) {
        return Err(Error::Dimension(
            "truth length differs from a report".into(),
        ));
    }
    let total = (reports.len() * p) as f64;
    let mean_abs = reports
        .iter()
        .map(|r| r.standardized(truth).abs().sum())
        .sum::<f64>()
        / total;
    if mean_abs > 5.0 {
        return Err(Error::ScaleMismatch(mean_abs));
    }
    let covered: usize = reports
        .iter()
        .map(|r| (0..p).filter(|&j| r.covers(j, truth[j])).count())
        .sum();
    Ok(covered as f64 / total)
}

/// Fraction of truly nonzero coordinates whose interval excludes zero,
/// averaged over replicates.
pub fn empirical_power(reports: &[InferenceReport], w0: &DVector<f64>) -> Result<f64> {
    let support: Vec<usize> = (0..w0.len()).filter(|&j| w0[j] != 0.0).collect();
    if support.is_empty() {
        return Err(Error::Parameter(
            "power needs at least one nonzero truth coordinate".into(),
        ));
    }
    if reports.is_empty() {
        return Err(Error::Parameter("no reports".into()));
    }
    if reports.iter().any(|r| r.len() != w0.len()) {
        return Err(Error::Dimension(
            "truth length differs from a report".into(),
        ));
    }
    let per_rep = |r: &InferenceReport| {
        support.iter().filter(|&&j| r.rejected[j]).count() as f64 / support.len() as f64
    };
    Ok(reports.iter().map(per_rep).sum::<f64>() / reports.len() as f64)
}
