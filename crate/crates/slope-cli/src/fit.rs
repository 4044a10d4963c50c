use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use slope_core::{
    fit_path, read_csv, read_libsvm, standardize, Family, PathConfig, PathResult, Response,
    SolverConfig, StepRecord,
};

use crate::CliError;

#[derive(Args)]
pub struct FitArgs {
    /// Input data file.
    #[arg(long)]
    pub data: PathBuf,
    /// Input format.
    #[arg(long, default_value = "csv", value_parser = ["csv", "libsvm"])]
    pub format: String,
    /// Response family.
    #[arg(long)]
    pub family: String,
    /// Response column name (csv only).
    #[arg(long, default_value = "y")]
    pub response_col: String,
    /// Benjamini-Hochberg parameter of the weight sequence.
    #[arg(long, default_value_t = 0.1)]
    pub q: f64,
    /// Number of grid points on the path.
    #[arg(long, default_value_t = 100)]
    pub path_length: usize,
    /// Ratio of the last grid point to the first (default: 1e-2 when n < p,
    /// 1e-4 otherwise).
    #[arg(long)]
    pub terminal_ratio: Option<f64>,
    /// Predictor screening mode.
    #[arg(long, default_value = "strong", value_parser = ["none", "strong"])]
    pub screening: String,
    /// Safeguarded screening driver.
    #[arg(long, default_value = "strong-set", value_parser = ["strong-set", "previous-set"])]
    pub driver: String,
    /// Duality gap tolerance as a fraction of the primal.
    #[arg(long, default_value_t = 1e-5)]
    pub gap_tol: f64,
    /// Relative dual infeasibility tolerance.
    #[arg(long, default_value_t = 1e-3)]
    pub infeas_tol: f64,
    /// Solver iteration budget per fit.
    #[arg(long, default_value_t = 100_000)]
    pub max_iterations: usize,
    /// KKT safeguard tolerance relative to the largest weight.
    #[arg(long, default_value_t = 1e-4)]
    pub kkt_tol: f64,
    /// Disable the early-stopping rules.
    #[arg(long)]
    pub no_early_stop: bool,
    /// Seed recorded in the report (fitting itself is deterministic).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output JSON report.
    #[arg(long, default_value = "results.json")]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct FitReport<'a> {
    version: &'static str,
    data: String,
    format: &'a str,
    family: Family,
    n: usize,
    p: usize,
    classes: usize,
    centered: bool,
    seed: u64,
    config: &'a PathConfig,
    sigma_max: f64,
    null_deviance: f64,
    termination: slope_core::Termination,
    steps: &'a [StepRecord],
}

pub fn run(args: &FitArgs) -> Result<(), CliError> {
    let family: Family = args
        .family
        .parse()
        .map_err(|e: slope_core::SlopeError| CliError::BadInput(e.to_string()))?;

    let table = match args.format.as_str() {
        "csv" => read_csv(&args.data, &args.response_col)?,
        "libsvm" => read_libsvm(&args.data)?,
        other => return Err(CliError::BadInput(format!("unknown format '{other}'"))),
    };
    let response = Response::from_values(family, table.labels)?;
    let (design, response) = standardize(&table.design, &response)?;

    let config = PathConfig {
        q: args.q,
        length: args.path_length,
        terminal_ratio: args.terminal_ratio,
        screening: args.screening.parse()?,
        driver: args.driver.parse()?,
        kkt_tol: args.kkt_tol,
        disable_early_stop: args.no_early_stop,
        solver: SolverConfig {
            max_iterations: args.max_iterations,
            gap_tol: args.gap_tol,
            infeas_tol: args.infeas_tol,
        },
        ..PathConfig::default()
    };

    let path: PathResult = fit_path(&design, &response, &config)?;

    let report = FitReport {
        version: env!("CARGO_PKG_VERSION"),
        data: args.data.display().to_string(),
        format: &args.format,
        family,
        n: path.n,
        p: path.p,
        classes: path.classes,
        centered: design.centered,
        seed: args.seed,
        config: &config,
        sigma_max: path.sigma_max,
        null_deviance: path.null_deviance,
        termination: path.termination,
        steps: &path.steps,
    };
    let out = BufWriter::new(File::create(&args.out)?);
    serde_json::to_writer_pretty(out, &report)
        .map_err(|e| CliError::BadInput(format!("writing report: {e}")))?;
    eprintln!(
        "fit: {} steps, termination {}, report written to {}",
        path.steps.len(),
        path.termination,
        args.out.display()
    );
    Ok(())
}
