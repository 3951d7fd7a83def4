//! Simulation campaigns: for each cell `(structure, sparsity, log λ)` solve the
//! replica equations once, fit `replicates` fresh training sets, and compare
//! empirical precision, coverage and power with their limiting values.
//!
//! Every random stream is addressed by the root seed plus the cell and
//! replicate identifiers, so a cell can be rerun alone and reruns are
//! byte-identical. Cells never share training or test data; the Monte-Carlo
//! draws of the replica solver are shared along λ within a structure and
//! sparsity, so the theoretical curves are smooth in λ.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::classifier::{fit_from, FitOptions};
use crate::covariance::{CorrelationKind, CovarianceFactors, CovarianceModel};
use crate::error::{Error, Result};
use crate::inference::{
    debias, empirical_coverage, empirical_power, empirical_precision, InferenceReport,
};
use crate::loss::LossModel;
use crate::mixture::{sample_dataset, MixtureDesign};
use crate::output::{self, fmt_float};
use crate::replica::{self, OrderParameters, SolveTrace, SolverOptions};
use crate::rng::{self, tags};
use crate::stats::{mean_interval, median};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub structure: CorrelationKind,
    pub sparsity: f64,
    pub log_lambda: f64,
}

impl CellSpec {
    pub fn lambda(&self) -> f64 {
        self.log_lambda.exp()
    }

    fn group(&self) -> (CorrelationKind, u64) {
        (self.structure, self.sparsity.to_bits())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub p: usize,
    pub alpha: f64,
    pub sigma2: f64,
    pub mu_norm: f64,
    pub rho: f64,
    pub band_value: f64,
    pub band_width: usize,
    pub structures: Vec<CorrelationKind>,
    pub sparsity: Vec<f64>,
    pub log_lambda: Vec<f64>,
    pub replicates: usize,
    /// Test-set size; defaults to the training size.
    pub test_size: Option<usize>,
    /// Test level; intervals have confidence `1 − level`.
    pub level: f64,
    pub loss: LossModel,
    /// Extra cell added to every campaign.
    pub baseline: CellSpec,
    /// Cell used for the histogram of one fit.
    pub histogram: CellSpec,
    pub solver: SolverOptions,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            p: 200,
            alpha: 0.5,
            sigma2: 2.0,
            mu_norm: 2.0,
            rho: 0.8,
            band_value: 0.4,
            band_width: 2,
            structures: vec![CorrelationKind::Iid, CorrelationKind::Ar1],
            sparsity: vec![0.01, 0.1],
            log_lambda: (0..7).map(|k| -4.0 + 0.5 * k as f64).collect(),
            replicates: 100,
            test_size: None,
            level: 0.05,
            loss: LossModel::Logistic,
            baseline: CellSpec {
                structure: CorrelationKind::Iid,
                sparsity: 0.05,
                log_lambda: -2.0,
            },
            histogram: CellSpec {
                structure: CorrelationKind::Ar1,
                sparsity: 0.1,
                log_lambda: -2.0,
            },
            solver: SolverOptions::default(),
            out_dir: PathBuf::from("results"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.p == 0 {
            return bad("p must be positive".into());
        }
        if !(self.alpha > 0.0 && self.sigma2 > 0.0 && self.mu_norm > 0.0) {
            return bad("alpha, sigma2 and mu_norm must be positive".into());
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return bad(format!("level must lie in (0, 1), got {}", self.level));
        }
        if self.replicates == 0 {
            return bad("replicates must be positive".into());
        }
        if self.test_size == Some(0) {
            return bad("test_size must be positive".into());
        }
        let cells = self
            .grid_cells()
            .into_iter()
            .chain([self.baseline, self.histogram]);
        for c in cells {
            if !(c.sparsity > 0.0 && c.sparsity <= 1.0) {
                return bad(format!("sparsity must lie in (0, 1], got {}", c.sparsity));
            }
            if !c.log_lambda.is_finite() {
                return bad("log_lambda values must be finite".into());
            }
            self.covariance_model(c.structure)
                .validate()
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        self.solver
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn n(&self) -> usize {
        ((self.alpha * self.p as f64).round() as usize).max(1)
    }

    pub fn test_size(&self) -> usize {
        self.test_size.unwrap_or_else(|| self.n())
    }

    pub fn covariance_model(&self, kind: CorrelationKind) -> CovarianceModel {
        CovarianceModel::new(kind, self.p, self.sigma2)
            .with_rho(self.rho)
            .with_band(self.band_value, self.band_width)
    }

    /// Structures × sparsity × λ, in that nesting order.
    pub fn grid_cells(&self) -> Vec<CellSpec> {
        let mut cells = Vec::new();
        for &structure in &self.structures {
            for &sparsity in &self.sparsity {
                for &log_lambda in &self.log_lambda {
                    cells.push(CellSpec {
                        structure,
                        sparsity,
                        log_lambda,
                    });
                }
            }
        }
        cells
    }

    /// The grid followed by the baseline cell when it is not already on it.
    pub fn campaign_cells(&self) -> Vec<CellSpec> {
        let mut cells = self.grid_cells();
        if !cells.contains(&self.baseline) {
            cells.push(self.baseline);
        }
        cells
    }

    /// Solver options of a cell; the Monte-Carlo stream is shared across λ.
    pub fn solver_options(&self, cell: &CellSpec) -> SolverOptions {
        let seed = rng::derive_seed(
            self.seed,
            &[
                tags::MONTE_CARLO,
                kind_code(cell.structure),
                cell.sparsity.to_bits(),
                self.solver.seed,
            ],
        );
        SolverOptions {
            seed,
            ..self.solver.clone()
        }
    }

    fn data_seed(&self, tag: u64, cell: &CellSpec, replicate: usize) -> u64 {
        rng::derive_seed(
            self.seed,
            &[
                tag,
                kind_code(cell.structure),
                cell.sparsity.to_bits(),
                cell.log_lambda.to_bits(),
                replicate as u64,
            ],
        )
    }

    /// Planted design of a cell; shared by every λ with the same structure and sparsity.
    pub fn design(
        &self,
        factors: Arc<CovarianceFactors>,
        cell: &CellSpec,
    ) -> Result<MixtureDesign> {
        let mut rng = rng::stream(
            self.seed,
            &[
                tags::DESIGN,
                kind_code(cell.structure),
                cell.sparsity.to_bits(),
            ],
        );
        MixtureDesign::planted(
            factors,
            cell.sparsity,
            self.alpha,
            self.mu_norm,
            cell.lambda(),
            &mut rng,
        )
    }
}

fn kind_code(kind: CorrelationKind) -> u64 {
    match kind {
        CorrelationKind::Iid => 0,
        CorrelationKind::BlockDiagonal => 1,
        CorrelationKind::Ar1 => 2,
        CorrelationKind::Banded => 3,
    }
}

/// Outcome of one training set within a cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub precision: f64,
    pub coverage: f64,
    /// NaN when the truth has no nonzero coordinate.
    pub power: f64,
    /// Fraction of null coordinates whose interval excludes zero.
    pub null_rejection: f64,
    pub nnz: usize,
    pub fit_converged: bool,
    pub kkt_residual: f64,
    /// `(w̄_j − centering_j)/se_j` over the null coordinates.
    pub null_standardized: Vec<f64>,
    pub representations_agree: bool,
}

#[derive(Clone, Debug)]
pub struct CellResult {
    pub cell: CellSpec,
    /// The replica solution, or the reason the cell failed.
    pub outcome: std::result::Result<CellSolution, String>,
    pub replicates: Vec<ReplicateResult>,
    pub seconds: f64,
}

#[derive(Clone, Debug)]
pub struct CellSolution {
    pub params: OrderParameters,
    pub iterations: usize,
    pub theoretical_precision: f64,
    pub theoretical_power: f64,
}

impl CellResult {
    pub fn is_ok(&self) -> bool {
        self.outcome.is_ok()
    }

    pub fn solution(&self) -> Option<&CellSolution> {
        self.outcome.as_ref().ok()
    }

    fn column(&self, f: impl Fn(&ReplicateResult) -> f64) -> Vec<f64> {
        self.replicates
            .iter()
            .map(f)
            .filter(|v| !v.is_nan())
            .collect()
    }

    pub fn precisions(&self) -> Vec<f64> {
        self.column(|r| r.precision)
    }

    pub fn coverages(&self) -> Vec<f64> {
        self.column(|r| r.coverage)
    }

    pub fn powers(&self) -> Vec<f64> {
        self.column(|r| r.power)
    }
}

#[derive(Clone, Debug)]
pub struct Campaign {
    pub config: ExperimentConfig,
    pub cells: Vec<CellResult>,
}

impl Campaign {
    pub fn failed(&self) -> usize {
        self.cells.iter().filter(|c| !c.is_ok()).count()
    }

    pub fn cell(&self, spec: &CellSpec) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.cell == *spec)
    }
}

fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Run every cell of `cells`; `observer` sees each cell as it completes.
///
/// Cells sharing a structure and sparsity are solved in the given λ order,
/// each replica solve starting from the previous solution.
pub fn run_campaign(
    config: &ExperimentConfig,
    cells: &[CellSpec],
    mut observer: impl FnMut(&CellResult),
) -> Result<Campaign> {
    config.validate()?;
    let mut groups: Vec<((CorrelationKind, u64), Vec<usize>)> = Vec::new();
    for (i, c) in cells.iter().enumerate() {
        match groups.iter_mut().find(|(g, _)| *g == c.group()) {
            Some((_, members)) => members.push(i),
            None => groups.push((c.group(), vec![i])),
        }
    }
    let mut factor_cache: Vec<(CorrelationKind, Arc<CovarianceFactors>)> = Vec::new();
    let mut results: Vec<Option<CellResult>> = vec![None; cells.len()];
    for (_, members) in groups {
        let kind = cells[members[0]].structure;
        let factors = match factor_cache.iter().find(|(k, _)| *k == kind) {
            Some((_, f)) => f.clone(),
            None => {
                let f = Arc::new(config.covariance_model(kind).factorize()?);
                factor_cache.push((kind, f.clone()));
                f
            }
        };
        let group_cells: Vec<CellSpec> = members.iter().map(|&i| cells[i]).collect();
        for (slot, result) in members
            .into_iter()
            .zip(run_group(config, factors, &group_cells)?)
        {
            observer(&result);
            results[slot] = Some(result);
        }
    }
    Ok(Campaign {
        config: config.clone(),
        cells: results
            .into_iter()
            .map(|r| r.expect("every cell runs"))
            .collect(),
    })
}

fn run_group(
    config: &ExperimentConfig,
    factors: Arc<CovarianceFactors>,
    cells: &[CellSpec],
) -> Result<Vec<CellResult>> {
    let base = config.design(factors.clone(), &cells[0])?;
    let designs: Vec<MixtureDesign> = cells.iter().map(|c| base.with_lambda(c.lambda())).collect();

    let mut init = config.solver.init;
    let mut solved: Vec<(std::result::Result<CellSolution, String>, f64)> = Vec::new();
    for (cell, design) in cells.iter().zip(&designs) {
        let start = Instant::now();
        let options = SolverOptions {
            init,
            ..config.solver_options(cell)
        };
        let outcome =
            replica::solve_fixed_point(design, config.loss, &options).map(|(params, trace)| {
                init = params.zeta_group();
                CellSolution {
                    params,
                    iterations: trace.iterates.len(),
                    theoretical_precision: replica::theoretical_precision(&params, design.mu_norm),
                    theoretical_power: replica::mean_theoretical_power(
                        &params,
                        design,
                        config.level,
                    ),
                }
            });
        solved.push((
            outcome.map_err(|e| e.to_string()),
            start.elapsed().as_secs_f64(),
        ));
    }

    let start = Instant::now();
    let fit_options = FitOptions::default();
    let mut per_replicate: Vec<Vec<Option<Result<ReplicateResult>>>> =
        map_indices(config.replicates, |rep| {
            cells
                .iter()
                .zip(&designs)
                .zip(&solved)
                .map(|((cell, design), (outcome, _))| {
                    let sol = outcome.as_ref().ok()?;
                    let train = sample_dataset(
                        design,
                        config.n(),
                        config.data_seed(tags::TRAIN, cell, rep),
                    );
                    let test = sample_dataset(
                        design,
                        config.test_size(),
                        config.data_seed(tags::TEST, cell, rep),
                    );
                    Some(replicate(
                        config,
                        design,
                        &sol.params,
                        &train,
                        &test,
                        &fit_options,
                        rep,
                    ))
                })
                .collect()
        });
    let fit_seconds = start.elapsed().as_secs_f64() / cells.len() as f64;

    let mut out = Vec::with_capacity(cells.len());
    for (k, (cell, (outcome, solve_seconds))) in cells.iter().zip(solved).enumerate() {
        let mut replicates = Vec::new();
        let mut outcome = outcome;
        if outcome.is_ok() {
            for rep in per_replicate.iter_mut() {
                match rep[k].take().expect("solved cell has replicate results") {
                    Ok(r) => replicates.push(r),
                    Err(e) => {
                        outcome = Err(format!("replicate {}: {e}", replicates.len()));
                        replicates.clear();
                        break;
                    }
                }
            }
        }
        out.push(CellResult {
            cell: *cell,
            outcome,
            replicates,
            seconds: solve_seconds + fit_seconds,
        });
    }
    Ok(out)
}

fn replicate(
    config: &ExperimentConfig,
    design: &MixtureDesign,
    params: &OrderParameters,
    train: &crate::mixture::Dataset,
    test: &crate::mixture::Dataset,
    fit_options: &FitOptions,
    rep: usize,
) -> Result<ReplicateResult> {
    let fit = fit_from(train, config.loss, design.lambda, None, fit_options)?;
    let precision = empirical_precision(&fit.w_hat, test)?;
    let w_bar = debias(
        &fit.w_hat,
        train,
        config.loss,
        &design.covariance,
        params.zeta,
    )?;
    let report = InferenceReport::new(
        fit.w_hat.clone(),
        w_bar,
        params.tau(),
        design.covariance.inv_diag(),
        config.level,
    )?;
    let truth = replica::asymptotic_mean(params, design);
    let reports = std::slice::from_ref(&report);
    let coverage = empirical_coverage(reports, &truth)?;
    let power = if design.w0.iter().any(|&w| w != 0.0) {
        empirical_power(reports, &design.w0)?
    } else {
        f64::NAN
    };
    let nulls: Vec<usize> = (0..design.p).filter(|&j| design.w0[j] == 0.0).collect();
    let z = report.standardized(&truth);
    let null_rejection = if nulls.is_empty() {
        f64::NAN
    } else {
        nulls.iter().filter(|&&j| report.rejected[j]).count() as f64 / nulls.len() as f64
    };
    let result = ReplicateResult {
        replicate: rep,
        precision,
        coverage,
        power,
        null_rejection,
        nnz: fit.nnz(),
        fit_converged: fit.converged,
        kkt_residual: fit.kkt_residual,
        null_standardized: nulls.iter().map(|&j| z[j]).collect(),
        representations_agree: report.representations_agree(),
    };
    Ok(result)
}

/// One replica solve for a single cell.
pub fn solve_cell(
    config: &ExperimentConfig,
    cell: &CellSpec,
) -> Result<(MixtureDesign, OrderParameters, SolveTrace)> {
    config.validate()?;
    let factors = Arc::new(config.covariance_model(cell.structure).factorize()?);
    let design = config.design(factors, cell)?;
    let (params, trace) =
        replica::solve_fixed_point(&design, config.loss, &config.solver_options(cell))?;
    Ok((design, params, trace))
}

/// Raw and de-biased coefficients of one fit with their limiting laws.
#[derive(Clone, Debug)]
pub struct Histogram {
    pub cell: CellSpec,
    pub params: OrderParameters,
    pub w0: DVector<f64>,
    pub w_hat: DVector<f64>,
    pub w_bar: DVector<f64>,
    pub mean: DVector<f64>,
    pub sd: DVector<f64>,
}

impl Histogram {
    pub fn zero_fraction(&self) -> f64 {
        self.w_hat.iter().filter(|&&w| w == 0.0).count() as f64 / self.w_hat.len() as f64
    }
}

pub fn run_histogram(config: &ExperimentConfig) -> Result<Histogram> {
    let cell = config.histogram;
    let (design, params, _) = solve_cell(config, &cell)?;
    let train = sample_dataset(
        &design,
        config.n(),
        config.data_seed(tags::HISTOGRAM, &cell, 0),
    );
    let fit = fit_from(
        &train,
        config.loss,
        design.lambda,
        None,
        &FitOptions::default(),
    )?;
    let w_bar = debias(
        &fit.w_hat,
        &train,
        config.loss,
        &design.covariance,
        params.zeta,
    )?;
    Ok(Histogram {
        cell,
        params,
        mean: replica::asymptotic_mean(&params, &design),
        sd: replica::asymptotic_sd(&params, &design),
        w0: design.w0,
        w_hat: fit.w_hat,
        w_bar,
    })
}

fn cell_fields(c: &CellSpec) -> [String; 3] {
    [
        c.structure.name().to_string(),
        c.sparsity.to_string(),
        c.log_lambda.to_string(),
    ]
}

fn status(c: &CellResult) -> &'static str {
    if c.is_ok() {
        "ok"
    } else {
        "failed"
    }
}

fn optional(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

/// `structure, sparsity, log_lambda, status, theo_precision, emp_mean, emp_ci_low, emp_ci_high, n_reps`.
pub fn write_precision_csv(campaign: &Campaign, path: &Path) -> Result<()> {
    write_summary(
        campaign,
        path,
        "theo_precision",
        |c| c.solution().map(|s| s.theoretical_precision),
        CellResult::precisions,
    )
}

/// `structure, sparsity, log_lambda, status, theo_power, emp_mean, emp_ci_low, emp_ci_high, n_reps`.
pub fn write_power_csv(campaign: &Campaign, path: &Path) -> Result<()> {
    write_summary(
        campaign,
        path,
        "theo_power",
        |c| c.solution().map(|s| s.theoretical_power),
        CellResult::powers,
    )
}

fn write_summary(
    campaign: &Campaign,
    path: &Path,
    theo_name: &str,
    theo: impl Fn(&CellResult) -> Option<f64>,
    values: impl Fn(&CellResult) -> Vec<f64>,
) -> Result<()> {
    let mut w = output::writer(path)?;
    w.write_record([
        "structure",
        "sparsity",
        "log_lambda",
        "status",
        theo_name,
        "emp_mean",
        "emp_ci_low",
        "emp_ci_high",
        "n_reps",
    ])?;
    for c in &campaign.cells {
        let v = values(c);
        let ci = if c.is_ok() && !v.is_empty() {
            Some(mean_interval(&v, 0.05)?)
        } else {
            None
        };
        let mut rec = cell_fields(&c.cell).to_vec();
        rec.push(status(c).to_string());
        rec.push(optional(theo(c)));
        rec.push(optional(ci.map(|m| m.mean)));
        rec.push(optional(ci.map(|m| m.low)));
        rec.push(optional(ci.map(|m| m.high)));
        rec.push(v.len().to_string());
        w.write_record(&rec)?;
    }
    output::finish(w, path)
}

/// Per-replicate rows: `structure, sparsity, log_lambda, replicate, coverage, null_rejection, power, precision, nnz, fit_converged`.
pub fn write_coverage_csv(campaign: &Campaign, path: &Path) -> Result<()> {
    let mut w = output::writer(path)?;
    w.write_record([
        "structure",
        "sparsity",
        "log_lambda",
        "replicate",
        "coverage",
        "null_rejection",
        "power",
        "precision",
        "nnz",
        "fit_converged",
    ])?;
    for c in &campaign.cells {
        for r in &c.replicates {
            let mut rec = cell_fields(&c.cell).to_vec();
            rec.extend([
                r.replicate.to_string(),
                fmt_float(r.coverage),
                fmt_float(r.null_rejection),
                fmt_float(r.power),
                fmt_float(r.precision),
                r.nnz.to_string(),
                r.fit_converged.to_string(),
            ]);
            w.write_record(&rec)?;
        }
    }
    output::finish(w, path)
}

/// `structure, sparsity, log_lambda, status, nominal, mean, median, ci_low, ci_high, n_reps`.
pub fn write_coverage_summary_csv(campaign: &Campaign, path: &Path) -> Result<()> {
    let mut w = output::writer(path)?;
    w.write_record([
        "structure",
        "sparsity",
        "log_lambda",
        "status",
        "nominal",
        "mean",
        "median",
        "ci_low",
        "ci_high",
        "n_reps",
    ])?;
    for c in &campaign.cells {
        let v = c.coverages();
        let ci = if v.is_empty() {
            None
        } else {
            Some(mean_interval(&v, 0.05)?)
        };
        let mut rec = cell_fields(&c.cell).to_vec();
        rec.extend([
            status(c).to_string(),
            fmt_float(1.0 - campaign.config.level),
            optional(ci.map(|m| m.mean)),
            optional(median(&v)),
            optional(ci.map(|m| m.low)),
            optional(ci.map(|m| m.high)),
            v.len().to_string(),
        ]);
        w.write_record(&rec)?;
    }
    output::finish(w, path)
}

/// `structure, sparsity, log_lambda, status, zeta0, zeta, r0, q0, q, r, tau, iterations, message`.
pub fn write_order_parameters_csv(campaign: &Campaign, path: &Path) -> Result<()> {
    let mut w = output::writer(path)?;
    let mut header: Vec<&str> = vec!["structure", "sparsity", "log_lambda", "status"];
    header.extend(OrderParameters::NAMES);
    header.extend(["tau", "iterations", "message"]);
    w.write_record(&header)?;
    for c in &campaign.cells {
        let mut rec = cell_fields(&c.cell).to_vec();
        rec.push(status(c).to_string());
        match &c.outcome {
            Ok(s) => {
                rec.extend(s.params.as_array().iter().map(|&v| fmt_float(v)));
                rec.push(fmt_float(s.params.tau()));
                rec.push(s.iterations.to_string());
                rec.push(String::new());
            }
            Err(msg) => {
                rec.extend(std::iter::repeat_n(String::new(), 8));
                rec.push(msg.clone());
            }
        }
        w.write_record(&rec)?;
    }
    output::finish(w, path)
}

/// `structure, sparsity, log_lambda, coordinate, truth_nonzero, w_hat, w_bar, asymptotic_mean, asymptotic_sd`.
pub fn write_histogram_csv(h: &Histogram, path: &Path) -> Result<()> {
    let mut w = output::writer(path)?;
    w.write_record([
        "structure",
        "sparsity",
        "log_lambda",
        "coordinate",
        "truth_nonzero",
        "w_hat",
        "w_bar",
        "asymptotic_mean",
        "asymptotic_sd",
    ])?;
    for j in 0..h.w_hat.len() {
        let mut rec = cell_fields(&h.cell).to_vec();
        rec.extend([
            (j + 1).to_string(),
            (h.w0[j] != 0.0).to_string(),
            fmt_float(h.w_hat[j]),
            fmt_float(h.w_bar[j]),
            fmt_float(h.mean[j]),
            fmt_float(h.sd[j]),
        ]);
        w.write_record(&rec)?;
    }
    output::finish(w, path)
}

/// File names written into the output directory.
pub mod files {
    pub const PRECISION: &str = "precision.csv";
    pub const COVERAGE: &str = "coverage.csv";
    pub const COVERAGE_SUMMARY: &str = "coverage_summary.csv";
    pub const POWER: &str = "power.csv";
    pub const ORDER_PARAMETERS: &str = "order_parameters.csv";
    pub const HISTOGRAM: &str = "histogram.csv";
    pub const SOLVE_TRACE: &str = "solve_trace.csv";
}

/// Write every campaign table into `dir`.
pub fn write_campaign(campaign: &Campaign, dir: &Path) -> Result<()> {
    write_precision_csv(campaign, &dir.join(files::PRECISION))?;
    write_power_csv(campaign, &dir.join(files::POWER))?;
    write_coverage_csv(campaign, &dir.join(files::COVERAGE))?;
    write_coverage_summary_csv(campaign, &dir.join(files::COVERAGE_SUMMARY))?;
    write_order_parameters_csv(campaign, &dir.join(files::ORDER_PARAMETERS))
}
