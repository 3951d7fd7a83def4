use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use replica_inference::experiments::{self, files, Campaign, CellResult, ExperimentConfig};
use replica_inference::replica::{self, OrderParameters};
use replica_inference::Error;

/// Replica asymptotics and de-biased inference experiments.
#[derive(Parser, Debug)]
#[command(name = "replica-inference", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML experiment config; defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the fixed-point equations for the baseline cell.
    Solve,
    /// Theoretical vs empirical precision over the grid.
    Precision,
    /// Per-replicate interval coverage over the grid.
    Coverage,
    /// Theoretical vs empirical power over the grid.
    Power,
    /// Raw and de-biased coefficients of one fit.
    Histogram,
    /// Every table above from one campaign.
    All,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Parameter(_) | Error::Dimension(_) | Error::Io { .. } => 1,
        _ => 2,
    }
}

fn load(common: &Common) -> Result<ExperimentConfig, Error> {
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(dir) = &common.out_dir {
        config.out_dir = dir.clone();
    }
    config.validate()?;
    Ok(config)
}

fn progress(c: &CellResult) {
    let cell = &c.cell;
    match &c.outcome {
        Ok(s) => eprintln!(
            "{} sparsity={} log_lambda={}: precision {:.4}, power {:.4}, {} replicates, {:.1}s",
            cell.structure,
            cell.sparsity,
            cell.log_lambda,
            s.theoretical_precision,
            s.theoretical_power,
            c.replicates.len(),
            c.seconds
        ),
        Err(msg) => eprintln!(
            "{} sparsity={} log_lambda={}: failed: {msg}",
            cell.structure, cell.sparsity, cell.log_lambda
        ),
    }
}

fn campaign(config: &ExperimentConfig) -> Result<Campaign, Error> {
    experiments::run_campaign(config, &config.campaign_cells(), progress)
}

fn solve(config: &ExperimentConfig, out: &Path) -> Result<(), Error> {
    let (design, params, trace) = experiments::solve_cell(config, &config.baseline)?;
    for (name, value) in OrderParameters::NAMES.iter().zip(params.as_array()) {
        println!("{name} = {value:.16e}");
    }
    println!("tau = {:.16e}", params.tau());
    println!(
        "theoretical_precision = {:.16e}",
        replica::theoretical_precision(&params, design.mu_norm)
    );
    println!(
        "theoretical_power = {:.16e}",
        replica::mean_theoretical_power(&params, &design, config.level)
    );
    println!("iterations = {}", trace.iterates.len());
    trace.write_csv(&out.join(files::SOLVE_TRACE))
}

fn run(cli: &Cli) -> Result<usize, Error> {
    let config = load(&cli.common)?;
    if let Some(n) = cli.common.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let out = config.out_dir.clone();
    std::fs::create_dir_all(&out).map_err(|source| Error::Io {
        path: out.clone(),
        source,
    })?;
    let failed = match cli.command {
        Command::Solve => {
            solve(&config, &out)?;
            0
        }
        Command::Histogram => {
            experiments::write_histogram_csv(
                &experiments::run_histogram(&config)?,
                &out.join(files::HISTOGRAM),
            )?;
            0
        }
        Command::Precision => {
            let c = campaign(&config)?;
            experiments::write_precision_csv(&c, &out.join(files::PRECISION))?;
            experiments::write_order_parameters_csv(&c, &out.join(files::ORDER_PARAMETERS))?;
            c.failed()
        }
        Command::Coverage => {
            let c = campaign(&config)?;
            experiments::write_coverage_csv(&c, &out.join(files::COVERAGE))?;
            experiments::write_coverage_summary_csv(&c, &out.join(files::COVERAGE_SUMMARY))?;
            experiments::write_order_parameters_csv(&c, &out.join(files::ORDER_PARAMETERS))?;
            c.failed()
        }
        Command::Power => {
            let c = campaign(&config)?;
            experiments::write_power_csv(&c, &out.join(files::POWER))?;
            experiments::write_order_parameters_csv(&c, &out.join(files::ORDER_PARAMETERS))?;
            c.failed()
        }
        Command::All => {
            let c = campaign(&config)?;
            experiments::write_campaign(&c, &out)?;
            let histogram_failed = match experiments::run_histogram(&config) {
                Ok(h) => {
                    experiments::write_histogram_csv(&h, &out.join(files::HISTOGRAM))?;
                    0
                }
                Err(e) => {
                    eprintln!("histogram failed: {e}");
                    1
                }
            };
            c.failed() + histogram_failed
        }
    };
    Ok(failed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(failed) => {
            eprintln!("{failed} cell(s) failed; see {}", files::ORDER_PARAMETERS);
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
