//! Browser bindings for the static demo in `www/`.

use std::str::FromStr;

use replica_inference::covariance::CorrelationKind;
use replica_inference::experiments::{run_histogram, CellSpec, ExperimentConfig};
use replica_inference::loss::{LossModel, ProxQuery};
use replica_inference::replica::{self, SolverOptions, ZetaGroup};
use wasm_bindgen::prelude::*;

fn js<E: std::fmt::Display>(e: E) -> JsError {
    JsError::new(&e.to_string())
}

/// Proximal map `u*(m)` of the named loss at fixed `q`, on `points` values of
/// `m` spread evenly over `[m_min, m_max]`. Returns `[m0, u0, m1, u1, ...]`.
#[wasm_bindgen]
pub fn prox_curve(
    loss: &str,
    q: f64,
    m_min: f64,
    m_max: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    let loss = LossModel::from_str(loss).map_err(js)?;
    if points < 2 || m_min.is_nan() || m_max.is_nan() || m_max <= m_min {
        return Err(JsError::new(
            "need at least two points on a non-empty range",
        ));
    }
    let mut out = Vec::with_capacity(2 * points);
    for k in 0..points {
        let m = m_min + (m_max - m_min) * k as f64 / (points - 1) as f64;
        out.push(m);
        out.push(loss.prox(ProxQuery::new(m, q)).map_err(js)?);
    }
    Ok(out)
}

fn demo_config(
    structure: &str,
    sparsity: f64,
    p: usize,
    mc_samples: usize,
) -> Result<ExperimentConfig, JsError> {
    let structure = CorrelationKind::from_str(structure).map_err(js)?;
    let cell = CellSpec {
        structure,
        sparsity,
        log_lambda: -2.0,
    };
    let config = ExperimentConfig {
        p,
        structures: vec![structure],
        sparsity: vec![sparsity],
        baseline: cell,
        histogram: cell,
        solver: SolverOptions {
            mc_samples,
            ..Default::default()
        },
        ..Default::default()
    };
    config.validate().map_err(js)?;
    Ok(config)
}

/// Theoretical precision and power along a grid of `log10 λ`.
/// Returns rows `[log_lambda, precision, power, tau]`; a cell where the
/// solver fails reports `NaN` for its three values.
#[wasm_bindgen]
pub fn lambda_sweep(
    structure: &str,
    sparsity: f64,
    p: usize,
    log_lambda: Vec<f64>,
    mc_samples: usize,
) -> Result<Vec<f64>, JsError> {
    let config = demo_config(structure, sparsity, p, mc_samples)?;
    let factors = std::sync::Arc::new(
        config
            .covariance_model(config.baseline.structure)
            .factorize()
            .map_err(js)?,
    );
    let mut init = ZetaGroup::default();
    let mut out = Vec::with_capacity(4 * log_lambda.len());
    for &l in &log_lambda {
        let cell = CellSpec {
            log_lambda: l,
            ..config.baseline
        };
        let design = config.design(factors.clone(), &cell).map_err(js)?;
        let options = SolverOptions {
            init,
            ..config.solver_options(&cell)
        };
        out.push(l);
        match replica::solve_fixed_point(&design, config.loss, &options) {
            Ok((params, _)) => {
                init = params.zeta_group();
                out.push(replica::theoretical_precision(&params, design.mu_norm));
                out.push(replica::mean_theoretical_power(
                    &params,
                    &design,
                    config.level,
                ));
                out.push(params.tau());
            }
            Err(_) => out.extend([f64::NAN; 3]),
        }
    }
    Ok(out)
}

/// One fit and its de-biased version. Returns rows
/// `[truth, w_hat, w_bar, predicted_mean, predicted_sd]`, one per coordinate.
#[wasm_bindgen]
pub fn debias_histogram(
    structure: &str,
    sparsity: f64,
    log_lambda: f64,
    p: usize,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    let mut config = demo_config(structure, sparsity, p, 300)?;
    config.seed = seed;
    config.histogram.log_lambda = log_lambda;
    let h = run_histogram(&config).map_err(js)?;
    let mut out = Vec::with_capacity(5 * p);
    for j in 0..p {
        out.extend([h.w0[j], h.w_hat[j], h.w_bar[j], h.mean[j], h.sd[j]]);
    }
    Ok(out)
}
