//! Correlation structures for the class-conditional covariance `Σ = σ²·R`
//! and the dense factors (`Σ^{1/2}`, `Σ^{-1}`, `diag(Σ^{-1})`) the rest of the
//! crate consumes.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible eigenvalue relative to the largest one.
pub const FACTOR_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationKind {
    Iid,
    /// 2×2 blocks `[[1, ρ], [ρ, 1]]` down the diagonal.
    #[serde(alias = "block")]
    BlockDiagonal,
    /// `R_ij = ρ^{|i-j|}`.
    Ar1,
    /// `R_ij = band_value` for `0 < |i-j| ≤ band_width`.
    Banded,
}

impl CorrelationKind {
    pub fn name(self) -> &'static str {
        match self {
            CorrelationKind::Iid => "iid",
            CorrelationKind::BlockDiagonal => "block_diagonal",
            CorrelationKind::Ar1 => "ar1",
            CorrelationKind::Banded => "banded",
        }
    }
}

impl std::str::FromStr for CorrelationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "iid" => Ok(Self::Iid),
            "block" | "block_diagonal" => Ok(Self::BlockDiagonal),
            "ar1" => Ok(Self::Ar1),
            "banded" => Ok(Self::Banded),
            other => Err(Error::Parameter(format!(
                "unknown correlation structure `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for CorrelationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Declarative description of `Σ = σ²·R`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceModel {
    pub kind: CorrelationKind,
    pub p: usize,
    pub sigma2: f64,
    pub rho: f64,
    pub band_value: f64,
    pub band_width: usize,
}

impl CovarianceModel {
    /// Model with the simulation defaults: ρ = 0.8, band value 0.4, band width 2.
    pub fn new(kind: CorrelationKind, p: usize, sigma2: f64) -> Self {
        Self {
            kind,
            p,
            sigma2,
            rho: 0.8,
            band_value: 0.4,
            band_width: 2,
        }
    }

    pub fn identity(p: usize) -> Self {
        Self::new(CorrelationKind::Iid, p, 1.0)
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_band(mut self, value: f64, width: usize) -> Self {
        self.band_value = value;
        self.band_width = width;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::Dimension("p must be at least 1".into()));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::Parameter(format!(
                "sigma2 must be positive, got {}",
                self.sigma2
            )));
        }
        match self.kind {
            CorrelationKind::Ar1 | CorrelationKind::BlockDiagonal if !(self.rho.abs() < 1.0) => {
                Err(Error::Parameter(format!(
                    "rho must lie in (-1, 1), got {}",
                    self.rho
                )))
            }
            CorrelationKind::BlockDiagonal if !self.p.is_multiple_of(2) => {
                Err(Error::Dimension(format!(
                    "block-diagonal structure uses 2x2 blocks and needs even p, got {}",
                    self.p
                )))
            }
            CorrelationKind::Banded if !self.band_value.is_finite() => {
                Err(Error::Parameter("band_value must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    /// The correlation matrix `R` (unit diagonal).
    pub fn correlation(&self) -> Result<DMatrix<f64>> {
        self.validate()?;
        let p = self.p;
        let r = match self.kind {
            CorrelationKind::Iid => DMatrix::identity(p, p),
            CorrelationKind::BlockDiagonal => DMatrix::from_fn(p, p, |i, j| {
                if i == j {
                    1.0
                } else if i / 2 == j / 2 {
                    self.rho
                } else {
                    0.0
                }
            }),
            CorrelationKind::Ar1 => DMatrix::from_fn(p, p, |i, j| {
                if i == j {
                    1.0
                } else {
                    self.rho.powi(i.abs_diff(j) as i32)
                }
            }),
            CorrelationKind::Banded => DMatrix::from_fn(p, p, |i, j| {
                let d = i.abs_diff(j);
                if d == 0 {
                    1.0
                } else if d <= self.band_width {
                    self.band_value
                } else {
                    0.0
                }
            }),
        };
        Ok(r)
    }

    /// `Σ = σ²·R`.
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        let mut sigma = self.correlation()? * self.sigma2;
        // exact σ² on the diagonal regardless of rounding in the product
        sigma.fill_diagonal(self.sigma2);
        Ok(sigma)
    }

    pub fn factorize(&self) -> Result<CovarianceFactors> {
        CovarianceFactors::from_matrix(self.covariance()?)
    }
}

/// Dense factors of a symmetric positive definite `Σ`. Immutable once built.
#[derive(Clone, Debug)]
pub struct CovarianceFactors {
    sigma: DMatrix<f64>,
    sqrt_sigma: DMatrix<f64>,
    inv_sigma: DMatrix<f64>,
    inv_diag: DVector<f64>,
    eigenvalues: DVector<f64>,
    diagonal: bool,
}

impl CovarianceFactors {
    /// Factor `Σ` through a full symmetric eigendecomposition.
    pub fn from_matrix(sigma: DMatrix<f64>) -> Result<Self> {
        let p = sigma.nrows();
        if p == 0 || sigma.ncols() != p {
            return Err(Error::Dimension(format!(
                "covariance must be square and non-empty, got {}x{}",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        let asym = (0..p)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| (sigma[(i, j)] - sigma[(j, i)]).abs())
            .fold(0.0, f64::max);
        let scale = sigma.amax();
        if asym > 1e-12 * scale.max(1.0) {
            return Err(Error::Parameter(format!(
                "covariance is not symmetric (max asymmetry {asym:e})"
            )));
        }
        let diagonal = (0..p).all(|j| (0..p).all(|i| i == j || sigma[(i, j)] == 0.0));

        if diagonal {
            let d = sigma.diagonal();
            let max = d.max();
            let min = d.min();
            if !(min > FACTOR_TOLERANCE * max) {
                return Err(Error::NotPositiveDefinite {
                    min_eigenvalue: min,
                    max_eigenvalue: max,
                });
            }
            return Ok(Self {
                sqrt_sigma: DMatrix::from_diagonal(&d.map(f64::sqrt)),
                inv_sigma: DMatrix::from_diagonal(&d.map(|v| 1.0 / v)),
                inv_diag: d.map(|v| 1.0 / v),
                eigenvalues: d,
                sigma,
                diagonal,
            });
        }

        let eig = SymmetricEigen::new(sigma.clone());
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        if !(max > 0.0 && min > FACTOR_TOLERANCE * max) {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: min,
                max_eigenvalue: max,
            });
        }
        let v = &eig.eigenvectors;
        let spectral = |f: &dyn Fn(f64) -> f64| {
            let scaled = DMatrix::from_fn(p, p, |i, k| v[(i, k)] * f(eig.eigenvalues[k]));
            symmetrize(scaled * v.transpose())
        };
        let sqrt_sigma = spectral(&f64::sqrt);
        let inv_sigma = spectral(&|l| 1.0 / l);
        let inv_diag = inv_sigma.diagonal();
        if inv_diag.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::Numeric(
                "non-positive diagonal in the inverse covariance".into(),
            ));
        }
        Ok(Self {
            sigma,
            sqrt_sigma,
            inv_sigma,
            inv_diag,
            eigenvalues: eig.eigenvalues,
            diagonal,
        })
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn sqrt_sigma(&self) -> &DMatrix<f64> {
        &self.sqrt_sigma
    }

    pub fn inv_sigma(&self) -> &DMatrix<f64> {
        &self.inv_sigma
    }

    /// `(Σ^{-1})_{jj}` for every `j`.
    pub fn inv_diag(&self) -> &DVector<f64> {
        &self.inv_diag
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// True when `Σ` has no off-diagonal entries; solvers take closed forms then.
    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.amax()
    }

    #[test]
    fn ar1_matches_powers() {
        let r = CovarianceModel::new(CorrelationKind::Ar1, 3, 1.0)
            .with_rho(0.8)
            .correlation()
            .unwrap();
        let expected =
            DMatrix::from_row_slice(3, 3, &[1.0, 0.8, 0.64, 0.8, 1.0, 0.8, 0.64, 0.8, 1.0]);
        assert!(max_abs(&(r - expected)) < 1e-15);
    }

    #[test]
    fn iid_and_banded() {
        let r = CovarianceModel::identity(2).correlation().unwrap();
        assert_eq!(r, DMatrix::identity(2, 2));
        let b = CovarianceModel::new(CorrelationKind::Banded, 4, 1.0)
            .with_band(0.4, 2)
            .correlation()
            .unwrap();
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.4, 0.4, 0.0, 0.4, 1.0, 0.4, 0.4, 0.4, 0.4, 1.0, 0.4, 0.0, 0.4, 0.4, 1.0,
            ],
        );
        assert_eq!(b, expected);
    }

    #[test]
    fn block_needs_even_dimension_and_valid_rho() {
        let odd = CovarianceModel::new(CorrelationKind::BlockDiagonal, 5, 1.0).correlation();
        assert!(matches!(odd, Err(Error::Dimension(_))));
        let bad = CovarianceModel::new(CorrelationKind::Ar1, 4, 1.0)
            .with_rho(1.0)
            .correlation();
        assert!(matches!(bad, Err(Error::Parameter(_))));
        let block = CovarianceModel::new(CorrelationKind::BlockDiagonal, 4, 1.0)
            .correlation()
            .unwrap();
        assert_eq!(block[(0, 1)], 0.8);
        assert_eq!(block[(1, 2)], 0.0);
        assert_eq!(block[(2, 3)], 0.8);
    }

    #[test]
    fn diagonal_factors_are_exact() {
        let f = CovarianceFactors::from_matrix(DMatrix::from_diagonal(&DVector::from_vec(vec![
            4.0, 9.0,
        ])))
        .unwrap();
        assert_eq!(f.sqrt_sigma()[(0, 0)], 2.0);
        assert_eq!(f.sqrt_sigma()[(1, 1)], 3.0);
        assert_eq!(f.inv_diag()[0], 0.25);
        assert_relative_eq!(f.inv_diag()[1], 1.0 / 9.0, epsilon = 1e-16);
        let id = CovarianceModel::identity(3).factorize().unwrap();
        assert_eq!(id.sqrt_sigma(), &DMatrix::identity(3, 3));
        assert_eq!(id.inv_sigma(), &DMatrix::identity(3, 3));
        assert!(id.inv_diag().iter().all(|&d| d == 1.0));
    }

    #[test]
    fn two_by_two_ar1_against_closed_form_eigensystem() {
        // 2·[[1, ρ], [ρ, 1]] has eigenpairs 2(1±ρ) on (1, ±1)/√2; build the
        // factors by hand from that decomposition.
        let rho = 0.8;
        let f = CovarianceModel::new(CorrelationKind::Ar1, 2, 2.0)
            .with_rho(rho)
            .factorize()
            .unwrap();
        let (lp, lm) = (2.0 * (1.0 + rho), 2.0 * (1.0 - rho));
        let build = |g: &dyn Fn(f64) -> f64| {
            let (a, b) = (g(lp), g(lm));
            DMatrix::from_row_slice(
                2,
                2,
                &[(a + b) / 2.0, (a - b) / 2.0, (a - b) / 2.0, (a + b) / 2.0],
            )
        };
        assert!(max_abs(&(f.sqrt_sigma() - build(&f64::sqrt))) < 1e-14);
        assert!(max_abs(&(f.inv_sigma() - build(&|l| 1.0 / l))) < 1e-13);
    }

    #[test]
    fn factor_identities_hold_for_every_structure() {
        for kind in [
            CorrelationKind::Iid,
            CorrelationKind::BlockDiagonal,
            CorrelationKind::Ar1,
            CorrelationKind::Banded,
        ] {
            for p in [4usize, 10, 50] {
                let f = CovarianceModel::new(kind, p, 2.0).factorize().unwrap();
                let s = f.sigma();
                assert!(
                    max_abs(&(f.sqrt_sigma() * f.sqrt_sigma() - s)) <= 1e-10,
                    "{kind} p={p}"
                );
                assert!(
                    max_abs(&(f.inv_sigma() * s - DMatrix::identity(p, p))) <= 1e-8,
                    "{kind} p={p}"
                );
                assert!(f.inv_diag().iter().all(|&d| d > 0.0));
                assert!(s.diagonal().iter().all(|&d| d == 2.0));
                assert!(f.eigenvalues().min() > 0.0);
            }
        }
    }

    #[test]
    fn ar1_inverse_is_tridiagonal() {
        let f = CovarianceModel::new(CorrelationKind::Ar1, 30, 2.0)
            .factorize()
            .unwrap();
        let inv = f.inv_sigma();
        let off = (0..30)
            .flat_map(|i| (0..30).map(move |j| (i, j)))
            .filter(|&(i, j): &(usize, usize)| i.abs_diff(j) > 1)
            .map(|(i, j)| inv[(i, j)].abs())
            .fold(0.0, f64::max);
        assert!(off <= 1e-10, "off-tridiagonal {off:e}");
    }

    #[test]
    fn rejects_indefinite_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        match CovarianceFactors::from_matrix(m) {
            Err(Error::NotPositiveDefinite { min_eigenvalue, .. }) => {
                assert_relative_eq!(min_eigenvalue, -1.0, epsilon = 1e-12)
            }
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }
}
