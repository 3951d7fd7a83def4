//! Order parameters of the high-dimensional limit and the alternating
//! fixed-point scheme that computes them.
//!
//! The six unknowns split into two groups. Given `(ζ₀, ζ, R₀)` the group
//! `(q₀, q, R)` is a Monte-Carlo average over `z ~ N(0, I_p)` of functionals of
//!
//! ```text
//! ŵ_z = argmin_w (ζ/2)·wᵀΣw − ⟨√ζ₀·Σ^{1/2}z + √p·R₀·μ̂, w⟩ + λ‖w‖₁
//! q₀ = E[ŵ_zᵀΣŵ_z]/p,   q = E[ŵ_zᵀΣ^{1/2}z]/(p·√ζ₀),   R = E[ŵ_zᵀμ̂]/√p
//! ```
//!
//! and given `(q₀, q, R)` the group `(ζ₀, ζ, R₀)` is a one-dimensional
//! Gauss-Hermite average over `ε ~ N(0, 1)` of `d = û_ε − Rμ − √q₀·ε`, where
//! `û_ε` is the loss prox at shift `Rμ + √q₀·ε` and scale `q`:
//!
//! ```text
//! ζ₀ = α/q²·E[d²],   ζ = −α/(q·√q₀)·E[d·ε],   R₀ = α·μ/q·E[d]
//! ```
//!
//! The z-draws are fixed for the whole solve (common random numbers), which
//! makes the iteration a deterministic map.

use std::path::Path;

use nalgebra::DVector;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::classifier::{solve_quad_lasso, Penalty, QuadLassoOptions, QuadLassoProblem};
use crate::covariance::CovarianceFactors;
use crate::error::{Error, Result};
use crate::loss::{LossModel, ProxQuery};
use crate::mixture::MixtureDesign;
use crate::normal;
use crate::output::{self, fmt_float};
use crate::quadrature::GaussHermite;
use crate::rng::{self, tags};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderParameters {
    pub zeta0: f64,
    pub zeta: f64,
    pub r0: f64,
    pub q0: f64,
    pub q: f64,
    pub r: f64,
}

impl OrderParameters {
    /// Noise scale `τ = √ζ₀/ζ` of the de-biased estimator.
    pub fn tau(&self) -> f64 {
        self.zeta0.sqrt() / self.zeta
    }

    pub fn zeta_group(&self) -> ZetaGroup {
        ZetaGroup {
            zeta0: self.zeta0,
            zeta: self.zeta,
            r0: self.r0,
        }
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.zeta0, self.zeta, self.r0, self.q0, self.q, self.r]
    }

    pub const NAMES: [&'static str; 6] = ["zeta0", "zeta", "r0", "q0", "q", "r"];
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZetaGroup {
    pub zeta0: f64,
    pub zeta: f64,
    pub r0: f64,
}

impl Default for ZetaGroup {
    fn default() -> Self {
        Self {
            zeta0: 1.0,
            zeta: 1.0,
            r0: 1.0,
        }
    }
}

/// Monte-Carlo estimate of `(q₀, q, R)` with per-component standard errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QGroup {
    pub q0: f64,
    pub q: f64,
    pub r: f64,
    pub std_err: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// z-draws per iteration.
    pub mc_samples: usize,
    /// Gauss-Hermite order for the ε-expectations.
    pub quad_nodes: usize,
    /// Weight of the new proposal in the ζ-group update.
    pub damping: f64,
    /// Convergence threshold on the relative change of the ζ-group.
    pub tol: f64,
    /// Convergence threshold on the relative change of the Monte-Carlo group.
    pub mc_tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub penalty: Penalty,
    pub init: ZetaGroup,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            mc_samples: 1000,
            quad_nodes: 64,
            damping: 0.5,
            tol: 1e-6,
            mc_tol: 1e-3,
            max_iters: 500,
            seed: 0,
            penalty: Penalty::L1,
            init: ZetaGroup::default(),
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.mc_samples == 0 {
            return Err(Error::Parameter("mc_samples must be positive".into()));
        }
        if self.quad_nodes == 0 {
            return Err(Error::Parameter("quad_nodes must be positive".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Parameter(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        if !(self.tol > 0.0 && self.mc_tol > 0.0) {
            return Err(Error::Parameter("tolerances must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Parameter("max_iters must be positive".into()));
        }
        let ZetaGroup { zeta0, zeta, r0 } = self.init;
        if !(zeta0 > 0.0 && zeta > 0.0 && r0.is_finite()) {
            return Err(Error::Parameter(
                "initial zeta0 and zeta must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Iteration history of a fixed-point solve.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveTrace {
    pub iterates: Vec<OrderParameters>,
    /// Max relative change over the six parameters at each iteration.
    pub residuals: Vec<f64>,
    pub converged: bool,
    /// Standard errors of the last Monte-Carlo group estimate.
    pub q_std_err: [f64; 3],
}

impl SolveTrace {
    /// CSV with one row per iteration.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = output::writer(path)?;
        w.write_record([
            "iteration",
            "zeta0",
            "zeta",
            "r0",
            "q0",
            "q",
            "r",
            "tau",
            "residual",
        ])?;
        for (k, (p, res)) in self.iterates.iter().zip(&self.residuals).enumerate() {
            let mut rec = vec![(k + 1).to_string()];
            rec.extend(p.as_array().iter().map(|&v| fmt_float(v)));
            rec.push(fmt_float(p.tau()));
            rec.push(fmt_float(*res));
            w.write_record(&rec)?;
        }
        output::finish(w, path)
    }
}

/// The fixed set of draws `Σ^{1/2}·z` shared by every iteration of a solve.
#[derive(Clone, Debug)]
pub struct ZStream {
    draws: Vec<DVector<f64>>,
}

impl ZStream {
    pub fn new(factors: &CovarianceFactors, samples: usize, seed: u64) -> Self {
        let p = factors.dim();
        let mut rng = rng::stream(seed, &[tags::MONTE_CARLO]);
        let draws = (0..samples)
            .map(|_| {
                let z = DVector::from_fn(p, |_, _| StandardNormal.sample(&mut rng));
                if factors.is_diagonal() {
                    z.component_mul(&factors.sqrt_sigma().diagonal())
                } else {
                    factors.sqrt_sigma() * z
                }
            })
            .collect();
        Self { draws }
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn draws(&self) -> &[DVector<f64>] {
        &self.draws
    }
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Monte-Carlo update of `(q₀, q, R)` for fixed `(ζ₀, ζ, R₀)`.
pub fn update_q_group(
    zeta: &ZetaGroup,
    design: &MixtureDesign,
    penalty: Penalty,
    stream: &ZStream,
    lasso: &QuadLassoOptions,
) -> Result<QGroup> {
    let mut warm = vec![DVector::zeros(design.p); stream.len()];
    update_q_group_warm(zeta, design, penalty, stream, lasso, &mut warm)
}

/// [`update_q_group`] where sample `k` starts from `warm[k]`, which is then
/// overwritten with the new solution.
pub fn update_q_group_warm(
    zeta: &ZetaGroup,
    design: &MixtureDesign,
    penalty: Penalty,
    stream: &ZStream,
    lasso: &QuadLassoOptions,
    warm: &mut [DVector<f64>],
) -> Result<QGroup> {
    if !(zeta.zeta0 > 0.0 && zeta.zeta > 0.0) {
        return Err(Error::Parameter(format!(
            "zeta0 and zeta must be positive, got {} and {}",
            zeta.zeta0, zeta.zeta
        )));
    }
    if stream.is_empty() {
        return Err(Error::Parameter("empty Monte-Carlo stream".into()));
    }
    if warm.len() != stream.len() {
        return Err(Error::Dimension(format!(
            "{} warm starts for {} samples",
            warm.len(),
            stream.len()
        )));
    }
    let p = design.p as f64;
    let sqrt_zeta0 = zeta.zeta0.sqrt();
    let signal = &design.mu_hat * (p.sqrt() * zeta.r0);
    let factors = design.covariance.as_ref();

    let one = |(sample, (sz, w)): (usize, (&DVector<f64>, &mut DVector<f64>))| -> Result<[f64; 3]> {
        let b = sz * sqrt_zeta0 + &signal;
        let problem = QuadLassoProblem {
            zeta: zeta.zeta,
            sigma: factors,
            b,
            lambda: design.lambda,
            penalty,
        };
        let sol = solve_quad_lasso(&problem, Some(w), lasso)?;
        if !sol.converged {
            return Err(Error::SubproblemNotConverged {
                sample,
                kkt: sol.kkt_residual,
            });
        }
        *w = sol.w;
        if w.iter().all(|&v| v == 0.0) {
            return Ok([0.0; 3]);
        }
        let quad = if factors.is_diagonal() {
            w.iter()
                .zip(factors.sigma().diagonal().iter())
                .map(|(wj, s)| s * wj * wj)
                .sum()
        } else {
            w.dot(&(factors.sigma() * &*w))
        };
        Ok([
            quad / p,
            w.dot(sz) / (p * sqrt_zeta0),
            w.dot(&design.mu_hat) / p.sqrt(),
        ])
    };

    #[cfg(feature = "parallel")]
    let per_sample: Vec<[f64; 3]> = {
        use rayon::prelude::*;
        stream
            .draws
            .par_iter()
            .zip(warm.par_iter_mut())
            .enumerate()
            .map(one)
            .collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let per_sample: Vec<[f64; 3]> = stream
        .draws
        .iter()
        .zip(warm.iter_mut())
        .enumerate()
        .map(one)
        .collect::<Result<_>>()?;

    let mut est = [0.0; 3];
    let mut se = [0.0; 3];
    for k in 0..3 {
        let col: Vec<f64> = per_sample.iter().map(|v| v[k]).collect();
        (est[k], se[k]) = mean_and_se(&col);
    }
    Ok(QGroup {
        q0: est[0],
        q: est[1],
        r: est[2],
        std_err: se,
    })
}

/// The three ε-expectations `E[d²]`, `E[d·ε]`, `E[d]` with `d = û_ε − Rμ − √q₀·ε`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProxMoments {
    pub d2: f64,
    pub d_eps: f64,
    pub d: f64,
}

pub fn prox_moments(
    q0: f64,
    q: f64,
    r: f64,
    mu_norm: f64,
    loss: LossModel,
    rule: &GaussHermite,
) -> Result<ProxMoments> {
    if !(q0 > 0.0 && q > 0.0) {
        return Err(Error::Parameter(format!(
            "q0 and q must be positive, got {q0} and {q}"
        )));
    }
    let sq0 = q0.sqrt();
    let (mut d2, mut d_eps, mut d) = (0.0, 0.0, 0.0);
    for (&eps, &w) in rule.nodes().iter().zip(rule.weights()) {
        let m = r * mu_norm + sq0 * eps;
        let dev = loss.prox(ProxQuery::new(m, q))? - m;
        d2 += w * dev * dev;
        d_eps += w * dev * eps;
        d += w * dev;
    }
    if !(d2.is_finite() && d_eps.is_finite() && d.is_finite()) {
        return Err(Error::Numeric(
            "non-finite value in the scalar expectations".into(),
        ));
    }
    Ok(ProxMoments { d2, d_eps, d })
}

/// Quadrature update of `(ζ₀, ζ, R₀)` for fixed `(q₀, q, R)`.
pub fn update_zeta_group(
    q0: f64,
    q: f64,
    r: f64,
    design: &MixtureDesign,
    loss: LossModel,
    rule: &GaussHermite,
) -> Result<ZetaGroup> {
    let mu = design.mu_norm;
    let alpha = design.alpha;
    let m = prox_moments(q0, q, r, mu, loss, rule)?;
    Ok(ZetaGroup {
        zeta0: alpha / (q * q) * m.d2,
        zeta: -alpha / (q * q0.sqrt()) * m.d_eps,
        r0: alpha * mu / q * m.d,
    })
}

fn rel_change(new: f64, old: f64) -> f64 {
    (new - old).abs() / old.abs().max(1e-8)
}

/// Alternate the two group updates until both stop moving.
pub fn solve_fixed_point(
    design: &MixtureDesign,
    loss: LossModel,
    options: &SolverOptions,
) -> Result<(OrderParameters, SolveTrace)> {
    options.validate()?;
    let rule = GaussHermite::new(options.quad_nodes)?;
    let stream = ZStream::new(&design.covariance, options.mc_samples, options.seed);
    solve_with_stream(design, loss, options, &stream, &rule)
}

/// [`solve_fixed_point`] with caller-supplied draws and quadrature rule.
pub fn solve_with_stream(
    design: &MixtureDesign,
    loss: LossModel,
    options: &SolverOptions,
    stream: &ZStream,
    rule: &GaussHermite,
) -> Result<(OrderParameters, SolveTrace)> {
    options.validate()?;
    let lasso = QuadLassoOptions::default();
    let mut trace = SolveTrace::default();
    let mut zg = options.init;
    let mut last_q: Option<QGroup> = None;
    let mut warm = vec![DVector::zeros(design.p); stream.len()];

    for _ in 0..options.max_iters {
        let qg = update_q_group_warm(&zg, design, options.penalty, stream, &lasso, &mut warm)?;
        if !(qg.q0 > 0.0) {
            return Err(Error::FullySparse {
                lambda: design.lambda,
            });
        }
        if !(qg.q > 0.0) {
            return Err(Error::Numeric(format!(
                "Monte-Carlo estimate of q is not positive ({:e})",
                qg.q
            )));
        }
        let proposal = update_zeta_group(qg.q0, qg.q, qg.r, design, loss, rule)?;
        if !(proposal.zeta > 0.0 && proposal.zeta0 > 0.0) {
            return Err(Error::Numeric(format!(
                "non-positive zeta update (zeta0 = {:e}, zeta = {:e})",
                proposal.zeta0, proposal.zeta
            )));
        }
        let d = options.damping;
        let next = ZetaGroup {
            zeta0: d * proposal.zeta0 + (1.0 - d) * zg.zeta0,
            zeta: d * proposal.zeta + (1.0 - d) * zg.zeta,
            r0: d * proposal.r0 + (1.0 - d) * zg.r0,
        };
        let zeta_change = rel_change(next.zeta0, zg.zeta0)
            .max(rel_change(next.zeta, zg.zeta))
            .max(rel_change(next.r0, zg.r0));
        let q_change = match last_q {
            Some(old) => rel_change(qg.q0, old.q0)
                .max(rel_change(qg.q, old.q))
                .max(rel_change(qg.r, old.r)),
            None => f64::INFINITY,
        };
        let params = OrderParameters {
            zeta0: next.zeta0,
            zeta: next.zeta,
            r0: next.r0,
            q0: qg.q0,
            q: qg.q,
            r: qg.r,
        };
        trace.iterates.push(params);
        trace.residuals.push(zeta_change.max(q_change));
        trace.q_std_err = qg.std_err;
        if zeta_change <= options.tol && q_change <= options.mc_tol {
            trace.converged = true;
            return Ok((params, trace));
        }
        zg = next;
        last_q = Some(qg);
    }
    let residual = trace.residuals.last().copied().unwrap_or(f64::INFINITY);
    Err(Error::NotConverged {
        iterations: options.max_iters,
        residual,
        trace: Box::new(trace),
    })
}

/// Limiting precision `Φ(R·μ/√q₀)`.
pub fn theoretical_precision(params: &OrderParameters, mu_norm: f64) -> f64 {
    normal::cdf(params.r * mu_norm / params.q0.sqrt())
}

/// Asymptotic mean `√p·R₀·Σ^{-1}μ̂/ζ` of the de-biased estimator.
pub fn asymptotic_mean(params: &OrderParameters, design: &MixtureDesign) -> DVector<f64> {
    &design.inv_sigma_mu_hat * ((design.p as f64).sqrt() * params.r0 / params.zeta)
}

/// Asymptotic standard deviations `τ·√((Σ^{-1})_jj)`.
pub fn asymptotic_sd(params: &OrderParameters, design: &MixtureDesign) -> DVector<f64> {
    design
        .covariance
        .inv_diag()
        .map(|d| params.tau() * d.sqrt())
}

/// Probability of rejecting `H₀: w_j = 0` at the given level under the
/// limiting normal law of the de-biased coordinate.
pub fn theoretical_power(
    params: &OrderParameters,
    design: &MixtureDesign,
    j: usize,
    level: f64,
) -> f64 {
    let mean = (design.p as f64).sqrt() * params.r0 * design.inv_sigma_mu_hat[j] / params.zeta;
    let sd = params.tau() * design.covariance.inv_diag()[j].sqrt();
    power_from_ratio(mean / sd, level)
}

/// `Φ(−z* + ρ) + Φ(−z* − ρ)` with `z* = Φ^{-1}(1 − level/2)`.
pub fn power_from_ratio(ratio: f64, level: f64) -> f64 {
    let z = normal::two_sided_critical(level);
    normal::sf(z - ratio) + normal::sf(z + ratio)
}

/// [`theoretical_power`] averaged over the truly nonzero coordinates of `w0`.
pub fn mean_theoretical_power(params: &OrderParameters, design: &MixtureDesign, level: f64) -> f64 {
    let support: Vec<usize> = (0..design.p).filter(|&j| design.w0[j] != 0.0).collect();
    if support.is_empty() {
        return level;
    }
    support
        .iter()
        .map(|&j| theoretical_power(params, design, j, level))
        .sum::<f64>()
        / support.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::{CorrelationKind, CovarianceModel};
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    fn iid_design(p: usize, sparsity: f64, lambda: f64, seed: u64) -> MixtureDesign {
        let f = Arc::new(
            CovarianceModel::new(CorrelationKind::Iid, p, 2.0)
                .factorize()
                .unwrap(),
        );
        MixtureDesign::planted(
            f,
            sparsity,
            0.5,
            2.0,
            lambda,
            &mut rng::stream(seed, &[tags::DESIGN]),
        )
        .unwrap()
    }

    #[test]
    fn precision_and_power_identities() {
        let base = OrderParameters {
            zeta0: 1.0,
            zeta: 1.0,
            r0: 1.0,
            q0: 1.0,
            q: 1.0,
            r: 0.0,
        };
        assert_eq!(theoretical_precision(&base, 2.0), 0.5);
        let p95 = OrderParameters {
            r: 1.6448536269514722 / 2.0,
            ..base
        };
        assert_abs_diff_eq!(theoretical_precision(&p95, 2.0), 0.95, epsilon = 1e-12);
        assert_abs_diff_eq!(power_from_ratio(0.0, 0.05), 0.05, epsilon = 1e-14);
        assert!(power_from_ratio(10.0, 0.05) >= 0.999999);
        assert!(power_from_ratio(-10.0, 0.05) >= 0.999999);
        assert_abs_diff_eq!(base.tau(), 1.0);
    }

    #[test]
    fn precision_increases_with_signal() {
        let p = OrderParameters {
            zeta0: 1.0,
            zeta: 1.0,
            r0: 1.0,
            q0: 0.7,
            q: 1.0,
            r: 0.4,
        };
        let vals: Vec<f64> = [0.5, 1.0, 2.0, 4.0]
            .iter()
            .map(|&mu| theoretical_precision(&p, mu))
            .collect();
        assert!(vals[0] >= 0.5 && vals.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn huge_lambda_zeroes_the_q_group() {
        let d = iid_design(50, 0.1, 1e6, 1);
        let stream = ZStream::new(&d.covariance, 50, 3);
        let qg = update_q_group(
            &ZetaGroup::default(),
            &d,
            Penalty::L1,
            &stream,
            &QuadLassoOptions::default(),
        )
        .unwrap();
        assert_eq!((qg.q0, qg.q, qg.r), (0.0, 0.0, 0.0));
        let err = solve_fixed_point(
            &d,
            LossModel::Logistic,
            &SolverOptions {
                mc_samples: 50,
                ..Default::default()
            },
        );
        assert!(matches!(err, Err(Error::FullySparse { .. })));
    }

    #[test]
    fn vanishing_q_collapses_prox() {
        let rule = GaussHermite::new(64).unwrap();
        let m = prox_moments(1.0, 1e-8, 0.5, 2.0, LossModel::Logistic, &rule).unwrap();
        assert!(m.d.abs() <= 1e-6 && m.d2.abs() <= 1e-6 && m.d_eps.abs() <= 1e-6);
    }

    #[test]
    fn hinge_flat_region_gives_tiny_zeta0() {
        let d = iid_design(20, 0.1, 0.1, 2);
        let rule = GaussHermite::new(64).unwrap();
        // Rμ = 20 ≫ 1 + q with tiny q0: every node sits where the hinge is flat
        let zg = update_zeta_group(1e-6, 0.5, 10.0, &d, LossModel::Hinge, &rule).unwrap();
        assert!(zg.zeta0.abs() < 1e-12);
    }

    #[test]
    fn gauss_hermite_orders_agree_for_logistic() {
        let d = iid_design(20, 0.1, 0.1, 3);
        let a = update_zeta_group(
            0.8,
            1.3,
            0.4,
            &d,
            LossModel::Logistic,
            &GaussHermite::new(32).unwrap(),
        )
        .unwrap();
        let b = update_zeta_group(
            0.8,
            1.3,
            0.4,
            &d,
            LossModel::Logistic,
            &GaussHermite::new(64).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(a.zeta0, b.zeta0, epsilon = 1e-8);
        assert_abs_diff_eq!(a.zeta, b.zeta, epsilon = 1e-8);
        assert_abs_diff_eq!(a.r0, b.r0, epsilon = 1e-8);
    }

    #[test]
    fn options_are_validated() {
        let d = iid_design(20, 0.1, 0.1, 4);
        for bad in [
            SolverOptions {
                damping: 0.0,
                ..Default::default()
            },
            SolverOptions {
                damping: 1.5,
                ..Default::default()
            },
            SolverOptions {
                mc_samples: 0,
                ..Default::default()
            },
            SolverOptions {
                init: ZetaGroup {
                    zeta0: -1.0,
                    zeta: 1.0,
                    r0: 1.0,
                },
                ..Default::default()
            },
        ] {
            assert!(matches!(
                solve_fixed_point(&d, LossModel::Logistic, &bad),
                Err(Error::Parameter(_))
            ));
        }
    }

    #[test]
    fn same_seed_gives_identical_traces() {
        let d = iid_design(100, 0.05, (-2.0f64).exp(), 5);
        let opts = SolverOptions {
            mc_samples: 200,
            seed: 17,
            ..Default::default()
        };
        let (a, ta) = solve_fixed_point(&d, LossModel::Logistic, &opts).unwrap();
        let (b, tb) = solve_fixed_point(&d, LossModel::Logistic, &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        assert!(ta.converged);
        assert!(a.zeta > 0.0 && a.zeta0 > 0.0);
        assert_abs_diff_eq!(a.tau(), a.zeta0.sqrt() / a.zeta, epsilon = 1e-15);
    }

    /// Bisection on the stationarity condition, independent of the Newton path.
    fn bisect_prox(loss: LossModel, m: f64, q: f64) -> f64 {
        let (mut lo, mut hi) = (m - 1.0, m + q + 1.0);
        for _ in 0..200 {
            let u = 0.5 * (lo + hi);
            // subgradient of V at u plus (u - m)/q, taking the right-derivative for the hinge
            let g = match loss {
                LossModel::Logistic => -1.0 / (1.0 + u.exp()),
                LossModel::Hinge => {
                    if u < 1.0 {
                        -1.0
                    } else {
                        0.0
                    }
                }
            } + (u - m) / q;
            if g < 0.0 {
                lo = u
            } else {
                hi = u
            }
        }
        0.5 * (lo + hi)
    }

    fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let c = 0.5 * (a + b);
        let (fa, fb, fc) = (f(a), f(b), f(c));
        #[allow(clippy::too_many_arguments)]
        fn rec<F: Fn(f64) -> f64>(
            f: &F,
            a: f64,
            b: f64,
            fa: f64,
            fb: f64,
            fc: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let c = 0.5 * (a + b);
            let (d, e) = (0.5 * (a + c), 0.5 * (c + b));
            let (fd, fe) = (f(d), f(e));
            let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
            let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, c, fa, fc, fd, left, 0.5 * tol, depth - 1)
                + rec(f, c, b, fc, fb, fe, right, 0.5 * tol, depth - 1)
        }
        let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
        rec(f, a, b, fa, fb, fc, whole, tol, depth)
    }

    fn oracle_zeta_group(
        q0: f64,
        q: f64,
        r: f64,
        mu: f64,
        alpha: f64,
        loss: LossModel,
    ) -> ZetaGroup {
        let phi = |e: f64| (-0.5 * e * e).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let dev = |e: f64| {
            let m = r * mu + q0.sqrt() * e;
            bisect_prox(loss, m, q) - m
        };
        let integrate =
            |g: &dyn Fn(f64) -> f64| adaptive_simpson(&|e| g(e) * phi(e), -12.0, 12.0, 1e-13, 40);
        let d2 = integrate(&|e| dev(e).powi(2));
        let de = integrate(&|e| dev(e) * e);
        let d1 = integrate(&|e| dev(e));
        ZetaGroup {
            zeta0: alpha / (q * q) * d2,
            zeta: -alpha / (q * q0.sqrt()) * de,
            r0: alpha * mu / q * d1,
        }
    }

    #[test]
    fn zeta_group_matches_adaptive_integration() {
        let d = iid_design(20, 0.1, 0.1, 6);
        let rule = GaussHermite::new(64).unwrap();
        let got = update_zeta_group(1.0, 1.0, 0.5, &d, LossModel::Logistic, &rule).unwrap();
        let want = oracle_zeta_group(1.0, 1.0, 0.5, 2.0, 0.5, LossModel::Logistic);
        assert_abs_diff_eq!(got.zeta0, want.zeta0, epsilon = 1e-6);
        assert_abs_diff_eq!(got.zeta, want.zeta, epsilon = 1e-6);
        assert_abs_diff_eq!(got.r0, want.r0, epsilon = 1e-6);
        assert!(got.zeta > 0.0);
    }

    #[test]
    fn zeta_is_positive_for_convex_losses() {
        let d = iid_design(20, 0.1, 0.1, 7);
        let rule = GaussHermite::new(64).unwrap();
        for loss in [LossModel::Logistic, LossModel::Hinge] {
            for &(q0, q, r) in &[
                (0.1, 0.1, 0.0),
                (1.0, 1.0, 0.5),
                (5.0, 20.0, 2.0),
                (30.0, 200.0, -1.0),
            ] {
                let zg = update_zeta_group(q0, q, r, &d, loss, &rule).unwrap();
                assert!(
                    zg.zeta > 0.0 && zg.zeta0 > 0.0,
                    "{loss} {q0} {q} {r}: {zg:?}"
                );
            }
        }
    }

    #[test]
    fn ridge_q_group_matches_gaussian_integrals() {
        let p = 50;
        let d = iid_design(p, 0.1, 0.3, 8);
        let d = MixtureDesign::new(
            Arc::new(CovarianceModel::identity(p).factorize().unwrap()),
            d.w0.clone(),
            0.5,
            2.0,
            0.3,
        )
        .unwrap();
        let zg = ZetaGroup {
            zeta0: 0.7,
            zeta: 1.3,
            r0: 0.4,
        };
        let stream = ZStream::new(&d.covariance, 4000, 11);
        let qg = update_q_group(
            &zg,
            &d,
            Penalty::Ridge,
            &stream,
            &QuadLassoOptions::default(),
        )
        .unwrap();
        // ŵ = b/(ζ + 2λ) with b = √ζ₀·z + √p·R₀·μ̂
        let k = zg.zeta + 2.0 * d.lambda;
        let want = [(zg.zeta0 + zg.r0 * zg.r0) / (k * k), 1.0 / k, zg.r0 / k];
        let got = [qg.q0, qg.q, qg.r];
        for c in 0..3 {
            assert!(
                (got[c] - want[c]).abs() <= 4.0 * qg.std_err[c] + 1e-12,
                "component {c}: {} vs {}",
                got[c],
                want[c]
            );
        }
    }

    #[test]
    fn mc_estimates_agree_across_sample_sizes() {
        let d = iid_design(200, 0.05, (-2.0f64).exp(), 9);
        let zg = ZetaGroup {
            zeta0: 0.004,
            zeta: 0.012,
            r0: 0.06,
        };
        let lasso = QuadLassoOptions::default();
        let small = update_q_group(
            &zg,
            &d,
            Penalty::L1,
            &ZStream::new(&d.covariance, 400, 1),
            &lasso,
        )
        .unwrap();
        let large = update_q_group(
            &zg,
            &d,
            Penalty::L1,
            &ZStream::new(&d.covariance, 1600, 2),
            &lasso,
        )
        .unwrap();
        let a = [small.q0, small.q, small.r];
        let b = [large.q0, large.q, large.r];
        for c in 0..3 {
            let se = small.std_err[c].hypot(large.std_err[c]);
            assert!(
                (a[c] - b[c]).abs() <= 2.0 * se.max(1e-3 * b[c].abs()),
                "component {c}: {} vs {} (se {se})",
                a[c],
                b[c]
            );
        }
    }

    #[test]
    fn ridge_fixed_point_matches_scalar_reduction() {
        let p = 200;
        let f = Arc::new(CovarianceModel::identity(p).factorize().unwrap());
        let d =
            MixtureDesign::planted(f, 0.1, 0.5, 2.0, 0.2, &mut rng::stream(10, &[tags::DESIGN]))
                .unwrap();
        let opts = SolverOptions {
            mc_samples: 1000,
            penalty: Penalty::Ridge,
            ..Default::default()
        };
        let (got, _) = solve_fixed_point(&d, LossModel::Logistic, &opts).unwrap();

        // With Σ = I every expectation is closed form except the scalar ones;
        // eliminating the q-group leaves a map in (ζ₀, ζ, R₀) iterated here.
        let k = |z: &ZetaGroup| z.zeta + 2.0 * d.lambda;
        let mut z = ZetaGroup::default();
        for _ in 0..2000 {
            let kk = k(&z);
            let (q0, q, r) = ((z.zeta0 + z.r0 * z.r0) / (kk * kk), 1.0 / kk, z.r0 / kk);
            let n = oracle_zeta_group(q0, q, r, 2.0, 0.5, LossModel::Logistic);
            let next = ZetaGroup {
                zeta0: 0.5 * (n.zeta0 + z.zeta0),
                zeta: 0.5 * (n.zeta + z.zeta),
                r0: 0.5 * (n.r0 + z.r0),
            };
            let done = (next.zeta0 - z.zeta0).abs() < 1e-12
                && (next.zeta - z.zeta).abs() < 1e-12
                && (next.r0 - z.r0).abs() < 1e-12;
            z = next;
            if done {
                break;
            }
        }
        let kk = k(&z);
        let want = [
            z.zeta0,
            z.zeta,
            z.r0,
            (z.zeta0 + z.r0 * z.r0) / (kk * kk),
            1.0 / kk,
            z.r0 / kk,
        ];
        for (c, (g, w)) in got.as_array().iter().zip(want).enumerate() {
            assert!(
                (g - w).abs() <= 0.02 * w.abs(),
                "{}: {g} vs {w}",
                OrderParameters::NAMES[c]
            );
        }
    }

    #[test]
    fn two_initializations_reach_the_same_point() {
        let d = iid_design(200, 0.05, (-2.0f64).exp(), 12);
        let a = SolverOptions {
            mc_samples: 300,
            ..Default::default()
        };
        let b = SolverOptions {
            init: ZetaGroup {
                zeta0: 0.5,
                zeta: 2.0,
                r0: 0.5,
            },
            ..a.clone()
        };
        let (pa, _) = solve_fixed_point(&d, LossModel::Logistic, &a).unwrap();
        let (pb, _) = solve_fixed_point(&d, LossModel::Logistic, &b).unwrap();
        for (x, y) in pa.as_array().iter().zip(pb.as_array()) {
            assert!((x - y).abs() <= 1e-3 * y.abs(), "{x} vs {y}");
        }
    }

    #[test]
    fn trace_csv_has_one_row_per_iteration() {
        let d = iid_design(50, 0.1, (-2.0f64).exp(), 13);
        let (_, trace) = solve_fixed_point(
            &d,
            LossModel::Logistic,
            &SolverOptions {
                mc_samples: 100,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(trace.converged);
        assert!(*trace.residuals.last().unwrap() <= 1e-3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        trace.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), trace.iterates.len() + 1);
        assert!(text.starts_with("iteration,zeta0,zeta,r0,q0,q,r,tau,residual"));
    }
}
