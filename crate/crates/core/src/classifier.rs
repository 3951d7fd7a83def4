//! L1-penalized margin classifiers
//!
//! ```text
//! ŵ = argmin_w  Σᵢ V(yᵢ·xᵢᵀw/√p) + λ‖w‖₁
//! ```
//!
//! (sum over observations, no `1/n` factor) and the quadratic-plus-penalty
//! sub-problem `(ζ/2)·wᵀΣw − bᵀw + J_λ(w)` solved once per Monte-Carlo draw
//! by the replica solver.
//!
//! The logistic fit is a proximal Newton method: each outer step builds the
//! second-order model of the loss at the current iterate, minimizes model plus
//! penalty by cyclic coordinate descent over an active set, and backtracks on
//! the true objective. The hinge has no curvature to model, so it is fit by
//! exact coordinate minimization on a Huber-smoothed hinge whose smoothing
//! width is driven towards zero.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::covariance::CovarianceFactors;
use crate::error::{Error, Result};
use crate::loss::LossModel;
use crate::mixture::Dataset;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    /// KKT residual required to declare convergence.
    pub tol: f64,
    /// Outer (Newton or continuation) iterations.
    pub max_iter: usize,
    /// Coordinate sweeps allowed per inner solve.
    pub max_sweeps: usize,
    /// Margins within this distance of the hinge kink use the whole subgradient interval.
    pub kink_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
            max_sweeps: 5_000,
            kink_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub w_hat: DVector<f64>,
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after every accepted outer step, starting at the initial point.
    pub objective_trace: Vec<f64>,
}

impl FitResult {
    pub fn nnz(&self) -> usize {
        self.w_hat.iter().filter(|&&w| w != 0.0).count()
    }
}

/// Scaled margins `yᵢ·xᵢᵀw/√p`.
pub fn margins(dataset: &Dataset, w: &DVector<f64>) -> Result<DVector<f64>> {
    if w.len() != dataset.p() {
        return Err(Error::Dimension(format!(
            "w has length {} but the data have p = {}",
            w.len(),
            dataset.p()
        )));
    }
    let s = 1.0 / (dataset.p() as f64).sqrt();
    let xw = &dataset.x * w;
    Ok(xw.component_mul(&dataset.y) * s)
}

/// Value of the penalized empirical objective at `w`.
pub fn objective(dataset: &Dataset, loss: LossModel, lambda: f64, w: &DVector<f64>) -> Result<f64> {
    let m = margins(dataset, w)?;
    Ok(penalized(loss, lambda, &m, w))
}

fn penalized(loss: LossModel, lambda: f64, m: &DVector<f64>, w: &DVector<f64>) -> f64 {
    m.iter().map(|&u| loss.value(u)).sum::<f64>() + lambda * w.lp_norm(1)
}

/// Soft-threshold `sign(x)·max(|x| − t, 0)`; exactly 0 at the kink.
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Largest KKT violation of `g + λ·∂‖w‖₁ ∋ 0`.
pub fn l1_kkt_residual(grad: &DVector<f64>, w: &DVector<f64>, lambda: f64) -> f64 {
    grad.iter()
        .zip(w.iter())
        .map(|(&g, &wj)| {
            if wj > 0.0 {
                (g + lambda).abs()
            } else if wj < 0.0 {
                (g - lambda).abs()
            } else {
                (g.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// KKT residual of a candidate `w` for the empirical problem; the hinge uses
/// the subgradient interval at margins within `kink_tol` of 1.
pub fn kkt_residual(
    dataset: &Dataset,
    loss: LossModel,
    lambda: f64,
    w: &DVector<f64>,
    kink_tol: f64,
) -> Result<f64> {
    let z = dataset.signed_scaled();
    let m = &z * w;
    Ok(match loss {
        LossModel::Logistic => {
            let r = m.map(|u| loss.derivative(u));
            l1_kkt_residual(&(z.transpose() * r), w, lambda)
        }
        LossModel::Hinge => hinge_interval_kkt(&z, &m, w, lambda, kink_tol),
    })
}

fn hinge_interval_kkt(
    z: &DMatrix<f64>,
    m: &DVector<f64>,
    w: &DVector<f64>,
    lambda: f64,
    kink_tol: f64,
) -> f64 {
    let dist = |x: f64, lo: f64, hi: f64| (lo - x).max(x - hi).max(0.0);
    (0..z.ncols())
        .map(|j| {
            let (mut lo, mut hi) = (0.0, 0.0);
            for (i, &zij) in z.column(j).iter().enumerate() {
                if (m[i] - 1.0).abs() <= kink_tol {
                    lo += (-zij).min(0.0);
                    hi += (-zij).max(0.0);
                } else if m[i] < 1.0 {
                    lo -= zij;
                    hi -= zij;
                }
            }
            if w[j] > 0.0 {
                dist(-lambda, lo, hi)
            } else if w[j] < 0.0 {
                dist(lambda, lo, hi)
            } else {
                (lo - lambda).max(-lambda - hi).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// Minimize the penalized empirical objective from `w = 0`.
pub fn fit(
    dataset: &Dataset,
    loss: LossModel,
    lambda: f64,
    options: &FitOptions,
) -> Result<FitResult> {
    fit_from(dataset, loss, lambda, None, options)
}

/// Same as [`fit`] with an optional starting point.
pub fn fit_from(
    dataset: &Dataset,
    loss: LossModel,
    lambda: f64,
    start: Option<&DVector<f64>>,
    options: &FitOptions,
) -> Result<FitResult> {
    if dataset.n() == 0 {
        return Err(Error::Dimension("cannot fit on an empty dataset".into()));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Parameter(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if let Some(s) = start {
        if s.len() != dataset.p() {
            return Err(Error::Dimension(format!(
                "start has length {} but p = {}",
                s.len(),
                dataset.p()
            )));
        }
    }
    let z = dataset.signed_scaled();
    let w = start
        .cloned()
        .unwrap_or_else(|| DVector::zeros(dataset.p()));
    let result = match loss {
        LossModel::Logistic => fit_smooth(&z, loss, lambda, w, options),
        LossModel::Hinge => fit_hinge(&z, lambda, w, options),
    }?;
    if !result.objective.is_finite() {
        return Err(Error::Numeric("objective became non-finite".into()));
    }
    Ok(result)
}

fn fit_smooth(
    z: &DMatrix<f64>,
    loss: LossModel,
    lambda: f64,
    mut w: DVector<f64>,
    opts: &FitOptions,
) -> Result<FitResult> {
    let (n, p) = z.shape();
    let mut m = z * &w;
    let mut f = penalized(loss, lambda, &m, &w);
    let mut trace = vec![f];
    let mut kkt = f64::INFINITY;
    let mut iterations = 0;

    let mut r = DVector::zeros(n);
    let mut v = DVector::zeros(n);
    let mut e = DVector::zeros(n);
    let mut a = vec![0.0; p];

    while iterations < opts.max_iter {
        for i in 0..n {
            r[i] = loss.derivative(m[i]);
            v[i] = loss.second_derivative(m[i]);
        }
        let g = z.transpose() * &r;
        kkt = l1_kkt_residual(&g, &w, lambda);
        if kkt <= opts.tol {
            break;
        }
        iterations += 1;

        let mut amax: f64 = 0.0;
        for (j, col) in z.column_iter().enumerate() {
            a[j] = col
                .iter()
                .zip(v.iter())
                .map(|(zij, vi)| vi * zij * zij)
                .sum();
            amax = amax.max(a[j]);
        }
        // keeps the model strictly convex when the data are (nearly) separated
        let ridge = 1e-10 * (1.0 + amax);

        // minimize the quadratic model over u; e tracks z·(u − w)
        let mut u = w.clone();
        e.fill(0.0);
        let inner_tol = (1e-2 * kkt).max(1e-14);
        let coordinate = |j: usize, u: &mut DVector<f64>, e: &mut DVector<f64>| -> f64 {
            let col = z.column(j);
            let grad = g[j]
                + col
                    .iter()
                    .zip(v.iter().zip(e.iter()))
                    .map(|(zij, (vi, ei))| zij * vi * ei)
                    .sum::<f64>()
                + ridge * (u[j] - w[j]);
            let aj = a[j] + ridge;
            let new = soft_threshold(aj * u[j] - grad, lambda) / aj;
            let delta = new - u[j];
            if delta != 0.0 {
                u[j] = new;
                e.axpy(delta, &col, 1.0);
            }
            delta.abs() * aj
        };
        run_active_set(p, opts.max_sweeps, inner_tol, &mut u, &mut e, coordinate);

        let delta_l1 = lambda * (u.lp_norm(1) - w.lp_norm(1));
        let decrease = r.dot(&e) + delta_l1;
        if !(decrease < 0.0) {
            break;
        }
        let d = &u - &w;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let w_try = &w + &d * t;
            let m_try = &m + &e * t;
            let f_try = penalized(loss, lambda, &m_try, &w_try);
            if f_try <= f + 1e-4 * t * decrease {
                w = w_try;
                m = m_try;
                f = f_try;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        trace.push(f);
    }
    if kkt > opts.tol {
        let r = m.map(|u| loss.derivative(u));
        kkt = l1_kkt_residual(&(z.transpose() * r), &w, lambda);
    }
    Ok(FitResult {
        w_hat: w,
        objective: f,
        kkt_residual: kkt,
        iterations,
        converged: kkt <= opts.tol,
        objective_trace: trace,
    })
}

/// Cyclic coordinate descent with an active-set strategy: sweep everything,
/// iterate over the nonzero coordinates until they settle, then confirm with
/// another full sweep. `update` returns the size of the change it made.
fn run_active_set<F>(
    p: usize,
    max_sweeps: usize,
    tol: f64,
    u: &mut DVector<f64>,
    e: &mut DVector<f64>,
    mut update: F,
) -> (usize, bool)
where
    F: FnMut(usize, &mut DVector<f64>, &mut DVector<f64>) -> f64,
{
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        let mut change = 0.0f64;
        for j in 0..p {
            change = change.max(update(j, u, e));
        }
        sweeps += 1;
        if change <= tol {
            return (sweeps, true);
        }
        let active: Vec<usize> = (0..p).filter(|&j| u[j] != 0.0).collect();
        while sweeps < max_sweeps {
            let mut change = 0.0f64;
            for &j in &active {
                change = change.max(update(j, u, e));
            }
            sweeps += 1;
            if change <= tol {
                break;
            }
        }
    }
    (sweeps, false)
}

/// Huber-smoothed hinge of width `delta` and its derivative.
fn smoothed_hinge(u: f64, delta: f64) -> (f64, f64) {
    if u >= 1.0 {
        (0.0, 0.0)
    } else if u > 1.0 - delta {
        let s = 1.0 - u;
        (s * s / (2.0 * delta), -s / delta)
    } else {
        (1.0 - u - 0.5 * delta, -1.0)
    }
}

fn fit_hinge(
    z: &DMatrix<f64>,
    lambda: f64,
    mut w: DVector<f64>,
    opts: &FitOptions,
) -> Result<FitResult> {
    let loss = LossModel::Hinge;
    let (_, p) = z.shape();
    let mut m = z * &w;
    let mut trace = vec![penalized(loss, lambda, &m, &w)];
    let mut iterations = 0;
    let mut delta = 1.0;
    let final_delta = (0.1 * opts.kink_tol).max(1e-12);

    while iterations < opts.max_iter {
        iterations += 1;
        let coordinate = |j: usize, w: &mut DVector<f64>, m: &mut DVector<f64>| -> f64 {
            let col = z.column(j);
            let wj = w[j];
            // φ'(t): derivative of the smoothed loss along coordinate j, nondecreasing in t
            let slope = |t: f64| -> f64 {
                col.iter()
                    .zip(m.iter())
                    .map(|(&zij, &mi)| zij * smoothed_hinge(mi + zij * (t - wj), delta).1)
                    .sum()
            };
            let s0 = slope(0.0);
            let target = if s0 < -lambda {
                -lambda
            } else if s0 > lambda {
                lambda
            } else {
                0.0
            };
            let new = if target == 0.0 {
                0.0
            } else {
                // root of slope(t) = target on the side away from zero
                let dir = if target < 0.0 { 1.0 } else { -1.0 };
                let f = |t: f64| slope(t) - target;
                let mut step = 1.0;
                let mut far = dir * step;
                let mut guard = 0;
                while f(far) * dir < 0.0 && guard < 200 {
                    step *= 2.0;
                    far = dir * step;
                    guard += 1;
                }
                let (mut lo, mut hi) = if dir > 0.0 { (0.0, far) } else { (far, 0.0) };
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid == lo || mid == hi {
                        break;
                    }
                    if f(mid) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            };
            let d = new - wj;
            if d != 0.0 {
                w[j] = new;
                m.axpy(d, &col, 1.0);
            }
            d.abs() * col.norm()
        };
        run_active_set(p, opts.max_sweeps, 1e-13, &mut w, &mut m, coordinate);
        m = z * &w;
        trace.push(penalized(loss, lambda, &m, &w));
        if delta <= final_delta {
            break;
        }
        delta = (delta * 0.1).max(final_delta);
    }
    let kkt = hinge_interval_kkt(z, &m, &w, lambda, opts.kink_tol);
    let objective = penalized(loss, lambda, &m, &w);
    Ok(FitResult {
        w_hat: w,
        objective,
        kkt_residual: kkt,
        iterations,
        converged: kkt <= opts.tol.max(opts.kink_tol),
        objective_trace: trace,
    })
}

/// Penalty used in the quadratic sub-problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Penalty {
    /// `λ·|w|`
    #[default]
    L1,
    /// `λ·w²`, the quadratic penalty with closed-form solutions.
    Ridge,
}

/// `argmin_w (ζ/2)·wᵀΣw − bᵀw + Σⱼ J_λ(wⱼ)`.
#[derive(Clone, Debug)]
pub struct QuadLassoProblem<'a> {
    pub zeta: f64,
    pub sigma: &'a CovarianceFactors,
    pub b: DVector<f64>,
    pub lambda: f64,
    pub penalty: Penalty,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadLassoOptions {
    /// Largest coordinate change in a confirming sweep.
    pub change_tol: f64,
    pub kkt_tol: f64,
    pub max_sweeps: usize,
}

impl Default for QuadLassoOptions {
    fn default() -> Self {
        Self {
            change_tol: 1e-10,
            kkt_tol: 1e-8,
            max_sweeps: 100_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct QuadLassoSolution {
    pub w: DVector<f64>,
    pub sweeps: usize,
    pub kkt_residual: f64,
    pub converged: bool,
}

impl QuadLassoProblem<'_> {
    fn validate(&self) -> Result<()> {
        if !(self.zeta > 0.0 && self.zeta.is_finite()) {
            return Err(Error::Parameter(format!(
                "zeta must be positive, got {}",
                self.zeta
            )));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::Parameter(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if self.b.len() != self.sigma.dim() {
            return Err(Error::Dimension(format!(
                "b has length {} but p = {}",
                self.b.len(),
                self.sigma.dim()
            )));
        }
        Ok(())
    }

    /// Value of the sub-problem objective at `w`.
    pub fn objective(&self, w: &DVector<f64>) -> f64 {
        let sw = self.sigma.sigma() * w;
        let pen = match self.penalty {
            Penalty::L1 => self.lambda * w.lp_norm(1),
            Penalty::Ridge => self.lambda * w.norm_squared(),
        };
        0.5 * self.zeta * w.dot(&sw) - self.b.dot(w) + pen
    }

    pub fn kkt_residual(&self, w: &DVector<f64>) -> f64 {
        let grad = self.sigma.sigma() * w * self.zeta - &self.b;
        match self.penalty {
            Penalty::L1 => l1_kkt_residual(&grad, w, self.lambda),
            Penalty::Ridge => grad
                .iter()
                .zip(w.iter())
                .map(|(g, wj)| (g + 2.0 * self.lambda * wj).abs())
                .fold(0.0, f64::max),
        }
    }
}

/// Cyclic coordinate descent in index order (closed form when `Σ` is diagonal).
pub fn solve_quad_lasso(
    problem: &QuadLassoProblem<'_>,
    warm_start: Option<&DVector<f64>>,
    options: &QuadLassoOptions,
) -> Result<QuadLassoSolution> {
    problem.validate()?;
    let p = problem.sigma.dim();
    let sigma = problem.sigma.sigma();
    let (zeta, lambda, b) = (problem.zeta, problem.lambda, &problem.b);
    let update = |j: usize, rest: f64| -> f64 {
        let sjj = sigma[(j, j)];
        match problem.penalty {
            Penalty::L1 => soft_threshold(rest, lambda) / (zeta * sjj),
            Penalty::Ridge => rest / (zeta * sjj + 2.0 * lambda),
        }
    };

    if problem.sigma.is_diagonal() {
        let w = DVector::from_fn(p, |j, _| update(j, b[j]));
        let kkt = problem.kkt_residual(&w);
        return Ok(QuadLassoSolution {
            w,
            sweeps: 1,
            kkt_residual: kkt,
            converged: kkt <= options.kkt_tol,
        });
    }

    let mut w = match warm_start {
        Some(s) if s.len() == p => s.clone(),
        Some(s) => {
            return Err(Error::Dimension(format!(
                "warm start has length {} but p = {p}",
                s.len()
            )))
        }
        None => DVector::zeros(p),
    };
    // c = Σ·w, kept in sync with every coordinate move
    let mut c = sigma * &w;
    let mut total = 0;
    let mut kkt = f64::INFINITY;
    while total < options.max_sweeps {
        let coordinate = |j: usize, w: &mut DVector<f64>, c: &mut DVector<f64>| -> f64 {
            let sjj = sigma[(j, j)];
            let rest = b[j] - zeta * (c[j] - sjj * w[j]);
            let new = update(j, rest);
            let d = new - w[j];
            if d != 0.0 {
                w[j] = new;
                c.axpy(d, &sigma.column(j), 1.0);
            }
            d.abs()
        };
        let (sweeps, _) = run_active_set(
            p,
            options.max_sweeps - total,
            options.change_tol,
            &mut w,
            &mut c,
            coordinate,
        );
        total += sweeps;
        c = sigma * &w;
        kkt = problem.kkt_residual(&w);
        if kkt <= options.kkt_tol {
            break;
        }
    }
    Ok(QuadLassoSolution {
        w,
        sweeps: total,
        kkt_residual: kkt,
        converged: kkt <= options.kkt_tol,
    })
}
