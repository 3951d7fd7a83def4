//! Planted sparse truth, class mean `μ = a·Σ·w₀`, and sampling of labeled
//! two-component Gaussian mixtures `x | y ~ N(y·μ, Σ)`.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::covariance::CovarianceFactors;
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};

/// A problem instance: dimension, sampling ratio, signal, covariance, truth
/// and penalty level.
#[derive(Clone, Debug)]
pub struct MixtureDesign {
    pub p: usize,
    /// `n / p`.
    pub alpha: f64,
    pub mu: DVector<f64>,
    pub mu_norm: f64,
    pub mu_hat: DVector<f64>,
    /// `Σ^{-1}·μ̂`, the direction of the asymptotic centering.
    pub inv_sigma_mu_hat: DVector<f64>,
    pub covariance: Arc<CovarianceFactors>,
    pub w0: DVector<f64>,
    pub sparsity: f64,
    pub lambda: f64,
}

impl MixtureDesign {
    /// Design around an explicit truth `w0`; `μ` is `Σ·w0` rescaled to `mu_norm`.
    pub fn new(
        covariance: Arc<CovarianceFactors>,
        w0: DVector<f64>,
        alpha: f64,
        mu_norm: f64,
        lambda: f64,
    ) -> Result<Self> {
        let p = covariance.dim();
        if w0.len() != p {
            return Err(Error::Dimension(format!(
                "w0 has length {} but p = {p}",
                w0.len()
            )));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Parameter(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Parameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        let mu = make_mean(&covariance, &w0, mu_norm)?;
        let nnz = w0.iter().filter(|&&w| w != 0.0).count();
        Ok(Self::assemble(
            covariance,
            w0,
            mu,
            alpha,
            lambda,
            nnz as f64 / p as f64,
        ))
    }

    /// Design with a freshly planted `{0,1}` truth at the given sparsity.
    pub fn planted(
        covariance: Arc<CovarianceFactors>,
        sparsity: f64,
        alpha: f64,
        mu_norm: f64,
        lambda: f64,
        rng: &mut StreamRng,
    ) -> Result<Self> {
        let w0 = make_sparse_truth(covariance.dim(), sparsity, rng)?;
        let mut design = Self::new(covariance, w0, alpha, mu_norm, lambda)?;
        design.sparsity = sparsity;
        Ok(design)
    }

    /// Design with an arbitrary mean vector (no planted truth needed), e.g.
    /// `μ = 0` for null checks. `w0` is set to `Σ^{-1}μ` when `μ ≠ 0`.
    pub fn with_mean(
        covariance: Arc<CovarianceFactors>,
        mu: DVector<f64>,
        alpha: f64,
        lambda: f64,
    ) -> Result<Self> {
        let p = covariance.dim();
        if mu.len() != p {
            return Err(Error::Dimension(format!(
                "mu has length {} but p = {p}",
                mu.len()
            )));
        }
        let w0 = covariance.inv_sigma() * &mu;
        Ok(Self::assemble(covariance, w0, mu, alpha, lambda, 1.0))
    }

    fn assemble(
        covariance: Arc<CovarianceFactors>,
        w0: DVector<f64>,
        mu: DVector<f64>,
        alpha: f64,
        lambda: f64,
        sparsity: f64,
    ) -> Self {
        let mu_norm = mu.norm();
        let mu_hat = if mu_norm > 0.0 {
            &mu / mu_norm
        } else {
            DVector::zeros(mu.len())
        };
        let inv_sigma_mu_hat = covariance.inv_sigma() * &mu_hat;
        Self {
            p: covariance.dim(),
            alpha,
            mu,
            mu_norm,
            mu_hat,
            inv_sigma_mu_hat,
            covariance,
            w0,
            sparsity,
            lambda,
        }
    }

    /// Training-set size `round(α·p)`.
    pub fn n(&self) -> usize {
        ((self.alpha * self.p as f64).round() as usize).max(1)
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self {
            lambda,
            ..self.clone()
        }
    }
}

/// `{0,1}^p` vector with exactly `round(sparsity·p)` ones, placed by a
/// Fisher-Yates shuffle of the seeded stream.
pub fn make_sparse_truth(p: usize, sparsity: f64, rng: &mut StreamRng) -> Result<DVector<f64>> {
    if !(sparsity > 0.0 && sparsity <= 1.0) {
        return Err(Error::Parameter(format!(
            "sparsity must lie in (0, 1], got {sparsity}"
        )));
    }
    let k = (sparsity * p as f64).round() as usize;
    if k == 0 {
        return Err(Error::Parameter(format!(
            "sparsity {sparsity} at p = {p} leaves no nonzero coordinate"
        )));
    }
    let mut idx: Vec<usize> = (0..p).collect();
    for i in (1..p).rev() {
        let j = rng.random_range(0..=i);
        idx.swap(i, j);
    }
    let mut w0 = DVector::zeros(p);
    for &i in &idx[..k] {
        w0[i] = 1.0;
    }
    Ok(w0)
}

/// `μ = a·Σ·w0` with `a` chosen so that `‖μ‖ = target_norm`.
pub fn make_mean(
    factors: &CovarianceFactors,
    w0: &DVector<f64>,
    target_norm: f64,
) -> Result<DVector<f64>> {
    if !(target_norm > 0.0 && target_norm.is_finite()) {
        return Err(Error::Parameter(format!(
            "target norm must be positive, got {target_norm}"
        )));
    }
    let direction = factors.sigma() * w0;
    let norm = direction.norm();
    if !(norm > 0.0) {
        return Err(Error::DegenerateSignal(
            "Σ·w0 vanishes, the classes share a mean".into(),
        ));
    }
    Ok(direction * (target_norm / norm))
}

/// Labeled sample: rows of `x` are observations, `y` holds ±1 labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub seed: u64,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::Dimension(format!(
                "x has {} rows but y has {} labels",
                x.nrows(),
                y.len()
            )));
        }
        if y.iter().any(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::Parameter("labels must be ±1".into()));
        }
        Ok(Self { x, y, seed: 0 })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Rows `y_i · x_i`, scaled by `1/√p`: the design matrix of the margins.
    pub fn signed_scaled(&self) -> DMatrix<f64> {
        let s = 1.0 / (self.p() as f64).sqrt();
        let mut z = self.x.clone();
        for (i, mut row) in z.row_iter_mut().enumerate() {
            row *= self.y[i] * s;
        }
        z
    }

    /// CSV with one row per observation: `y, x1, …, xp`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = crate::output::writer(path)?;
        let mut header = vec!["y".to_string()];
        header.extend((1..=self.p()).map(|j| format!("x{j}")));
        w.write_record(&header)?;
        for i in 0..self.n() {
            let mut rec = vec![format!("{}", self.y[i])];
            rec.extend(self.x.row(i).iter().map(|&v| crate::output::fmt_float(v)));
            w.write_record(&rec)?;
        }
        crate::output::finish(w, path)
    }
}

/// `n` observations with Bernoulli(1/2) labels and `x_i = y_i·μ + Σ^{1/2}·g_i`.
pub fn sample_dataset(design: &MixtureDesign, n: usize, seed: u64) -> Dataset {
    let mut rng = rng::stream(seed, &[]);
    let mut data = sample_with_rng(design, n, &mut rng);
    data.seed = seed;
    data
}

pub fn sample_with_rng(design: &MixtureDesign, n: usize, rng: &mut StreamRng) -> Dataset {
    let p = design.p;
    let mut y = DVector::zeros(n);
    let mut g = DMatrix::zeros(n, p);
    for i in 0..n {
        y[i] = if rng.random::<bool>() { 1.0 } else { -1.0 };
        for j in 0..p {
            g[(i, j)] = rng.sample(StandardNormal);
        }
    }
    let factors = &design.covariance;
    let mut x = if factors.is_diagonal() {
        let mut x = g;
        for (j, mut col) in x.column_iter_mut().enumerate() {
            col *= factors.sqrt_sigma()[(j, j)];
        }
        x
    } else {
        // sqrt_sigma is symmetric, so G·Σ^{1/2} gives rows Σ^{1/2}·g_i
        g * factors.sqrt_sigma()
    };
    for i in 0..n {
        for j in 0..p {
            x[(i, j)] += y[i] * design.mu[j];
        }
    }
    Dataset { x, y, seed: 0 }
}
