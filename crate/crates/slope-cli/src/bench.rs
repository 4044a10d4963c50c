use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use slope_core::{
    fit_path, generate_dataset, standardize, BetaScheme, DesignKind, Family, GenSpec, PathConfig,
    SolverConfig,
};

use crate::CliError;

#[derive(Args)]
pub struct BenchArgs {
    /// TOML file listing the experiment matrix.
    #[arg(long)]
    pub config: PathBuf,
    /// Long-format CSV output (one row per path step per run).
    #[arg(long, default_value = "bench.csv")]
    pub out: PathBuf,
    /// JSON run manifest (defaults to the output path with a .json extension).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Concurrent benchmark cells (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Experiment {
    pub name: String,
    pub design: String,
    pub family: String,
    pub n: usize,
    pub p: usize,
    pub k: usize,
    #[serde(default)]
    pub rho: f64,
    pub beta: String,
    #[serde(default = "default_noise")]
    pub noise_scale: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: u64,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default = "default_path_length")]
    pub path_length: usize,
    #[serde(default)]
    pub terminal_ratio: Option<f64>,
    #[serde(default = "default_screening")]
    pub screening: Vec<String>,
    #[serde(default = "default_driver")]
    pub driver: String,
    #[serde(default)]
    pub disable_early_stop: bool,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_gap_tol")]
    pub gap_tol: f64,
    #[serde(default = "default_infeas_tol")]
    pub infeas_tol: f64,
    #[serde(default = "default_classes")]
    pub classes: usize,
}

fn default_noise() -> f64 {
    1.0
}
fn default_replicates() -> u64 {
    1
}
fn default_q() -> f64 {
    0.1
}
fn default_path_length() -> usize {
    100
}
fn default_screening() -> Vec<String> {
    vec!["strong".into()]
}
fn default_driver() -> String {
    "strong-set".into()
}
fn default_max_iterations() -> usize {
    10_000
}
fn default_gap_tol() -> f64 {
    1e-5
}
fn default_infeas_tol() -> f64 {
    1e-3
}
fn default_classes() -> usize {
    3
}

#[derive(Debug, Deserialize)]
struct BenchConfig {
    #[serde(default)]
    experiment: Vec<Experiment>,
}

/// One benchmark cell: an experiment, a replicate, and a screening mode. The
/// replicate (not the mode) determines the seed, so the screened and
/// unscreened runs of a replicate see byte-identical data.
#[derive(Debug, Clone)]
struct Cell {
    experiment_index: usize,
    replicate: u64,
    screening: String,
}

/// One emitted CSV row. Timing fields stay in the final two columns so runs
/// can be compared byte-for-byte after stripping them.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRecord {
    pub experiment: String,
    pub design: String,
    pub family: String,
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub rho: f64,
    pub beta: String,
    pub noise_scale: f64,
    pub seed: u64,
    pub replicate: u64,
    pub screening: String,
    pub driver: String,
    pub checksum: String,
    pub status: String,
    pub termination: String,
    pub step: i64,
    pub sigma: f64,
    pub active: usize,
    pub screened: usize,
    pub strong_set: usize,
    pub violations: usize,
    pub screen_violations: usize,
    pub refits: usize,
    pub solves: usize,
    pub iterations: usize,
    pub deviance_ratio: f64,
    pub converged: bool,
    pub step_seconds: f64,
    pub path_seconds: f64,
}

const CSV_HEADER: &str = "experiment,design,family,n,p,k,rho,beta,noise_scale,seed,replicate,\
screening,driver,checksum,status,termination,step,sigma,active,screened,strong_set,violations,\
screen_violations,refits,solves,iterations,deviance_ratio,converged,step_seconds,path_seconds";

impl BenchRecord {
    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.experiment,
            self.design,
            self.family,
            self.n,
            self.p,
            self.k,
            self.rho,
            self.beta,
            self.noise_scale,
            self.seed,
            self.replicate,
            self.screening,
            self.driver,
            self.checksum,
            self.status,
            self.termination,
            self.step,
            self.sigma,
            self.active,
            self.screened,
            self.strong_set,
            self.violations,
            self.screen_violations,
            self.refits,
            self.solves,
            self.iterations,
            self.deviance_ratio,
            self.converged,
            self.step_seconds,
            self.path_seconds,
        )
    }
}

#[derive(Serialize)]
struct ManifestCell {
    experiment: String,
    replicate: u64,
    screening: String,
    seed: u64,
    checksum: String,
    status: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'static str,
    config_path: String,
    experiments: &'a [Experiment],
    cells: Vec<ManifestCell>,
}

fn gen_spec_for(exp: &Experiment, replicate: u64) -> Result<GenSpec, CliError> {
    let design_kind: DesignKind = exp.design.parse()?;
    let family: Family = exp.family.parse()?;
    let beta_scheme: BetaScheme = exp.beta.parse()?;
    Ok(GenSpec {
        n: exp.n,
        p: exp.p,
        k: exp.k,
        rho: exp.rho,
        design_kind,
        family,
        beta_scheme,
        noise_scale: exp.noise_scale,
        seed: exp.seed.wrapping_add(replicate),
        classes: exp.classes,
    })
}

fn run_cell(exp: &Experiment, cell: &Cell) -> Result<(String, Vec<BenchRecord>), String> {
    let spec = gen_spec_for(exp, cell.replicate).map_err(|e| e.message().to_string())?;
    let data = generate_dataset(&spec).map_err(|e| e.to_string())?;
    let checksum = format!("{:016x}", data.checksum);
    let (design, response) = standardize(&data.design, &data.response).map_err(|e| e.to_string())?;
    let config = PathConfig {
        q: exp.q,
        length: exp.path_length,
        terminal_ratio: exp.terminal_ratio,
        screening: cell.screening.parse().map_err(|e: slope_core::SlopeError| e.to_string())?,
        driver: exp.driver.parse().map_err(|e: slope_core::SlopeError| e.to_string())?,
        disable_early_stop: exp.disable_early_stop,
        solver: SolverConfig {
            max_iterations: exp.max_iterations,
            gap_tol: exp.gap_tol,
            infeas_tol: exp.infeas_tol,
        },
        ..PathConfig::default()
    };
    let started = Instant::now();
    let path = fit_path(&design, &response, &config).map_err(|e| e.to_string())?;
    let path_seconds = started.elapsed().as_secs_f64();

    let rows = path
        .steps
        .iter()
        .enumerate()
        .map(|(m, s)| BenchRecord {
            experiment: exp.name.clone(),
            design: exp.design.clone(),
            family: exp.family.clone(),
            n: exp.n,
            p: exp.p,
            k: exp.k,
            rho: exp.rho,
            beta: exp.beta.clone(),
            noise_scale: exp.noise_scale,
            seed: spec.seed,
            replicate: cell.replicate,
            screening: cell.screening.clone(),
            driver: exp.driver.clone(),
            checksum: checksum.clone(),
            status: "ok".into(),
            termination: path.termination.to_string(),
            step: m as i64,
            sigma: s.sigma,
            active: s.active,
            screened: s.screened,
            strong_set: s.strong_set_size,
            violations: s.violations,
            screen_violations: s.screen_violations,
            refits: s.refits,
            solves: s.solves,
            iterations: s.iterations,
            deviance_ratio: s.deviance_ratio,
            converged: s.converged,
            step_seconds: s.wall_seconds,
            path_seconds,
        })
        .collect();
    Ok((checksum, rows))
}

fn error_record(exp: &Experiment, cell: &Cell, seed: u64, message: &str) -> BenchRecord {
    BenchRecord {
        experiment: exp.name.clone(),
        design: exp.design.clone(),
        family: exp.family.clone(),
        n: exp.n,
        p: exp.p,
        k: exp.k,
        rho: exp.rho,
        beta: exp.beta.clone(),
        noise_scale: exp.noise_scale,
        seed,
        replicate: cell.replicate,
        screening: cell.screening.clone(),
        driver: exp.driver.clone(),
        checksum: String::new(),
        status: format!("error: {}", message.replace(',', ";")),
        termination: String::new(),
        step: -1,
        sigma: 0.0,
        active: 0,
        screened: 0,
        strong_set: 0,
        violations: 0,
        screen_violations: 0,
        refits: 0,
        solves: 0,
        iterations: 0,
        deviance_ratio: 0.0,
        converged: false,
        step_seconds: 0.0,
        path_seconds: 0.0,
    }
}

pub fn run(args: &BenchArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config)?;
    let config: BenchConfig =
        toml::from_str(&text).map_err(|e| CliError::BadInput(format!("config: {e}")))?;
    if config.experiment.is_empty() {
        return Err(CliError::BadInput("config lists no experiments".into()));
    }
    for exp in &config.experiment {
        // Validate eagerly so a typo fails before any cell runs.
        gen_spec_for(exp, 0)?.validate()?;
    }

    let mut cells = Vec::new();
    for (experiment_index, exp) in config.experiment.iter().enumerate() {
        for replicate in 0..exp.replicates {
            for screening in &exp.screening {
                cells.push(Cell {
                    experiment_index,
                    replicate,
                    screening: screening.clone(),
                });
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| CliError::BadInput(e.to_string()))?;
    let outcomes: Vec<(Cell, Result<(String, Vec<BenchRecord>), String>)> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let exp = &config.experiment[cell.experiment_index];
                (cell.clone(), run_cell(exp, cell))
            })
            .collect()
    });

    // Equal seeds must mean equal data across screening modes.
    for (i, (a_cell, a_out)) in outcomes.iter().enumerate() {
        for (b_cell, b_out) in outcomes.iter().skip(i + 1) {
            if a_cell.experiment_index == b_cell.experiment_index
                && a_cell.replicate == b_cell.replicate
            {
                if let (Ok((ca, _)), Ok((cb, _))) = (a_out, b_out) {
                    assert_eq!(ca, cb, "checksum mismatch across screening modes");
                }
            }
        }
    }

    let mut out = BufWriter::new(File::create(&args.out)?);
    writeln!(out, "{CSV_HEADER}")?;
    let mut manifest_cells = Vec::with_capacity(outcomes.len());
    let mut failures = 0usize;
    for (cell, outcome) in &outcomes {
        let exp = &config.experiment[cell.experiment_index];
        let seed = exp.seed.wrapping_add(cell.replicate);
        match outcome {
            Ok((checksum, rows)) => {
                for row in rows {
                    writeln!(out, "{}", row.csv_line())?;
                }
                manifest_cells.push(ManifestCell {
                    experiment: exp.name.clone(),
                    replicate: cell.replicate,
                    screening: cell.screening.clone(),
                    seed,
                    checksum: checksum.clone(),
                    status: "ok".into(),
                });
            }
            Err(message) => {
                failures += 1;
                writeln!(out, "{}", error_record(exp, cell, seed, message).csv_line())?;
                manifest_cells.push(ManifestCell {
                    experiment: exp.name.clone(),
                    replicate: cell.replicate,
                    screening: cell.screening.clone(),
                    seed,
                    checksum: String::new(),
                    status: format!("error: {message}"),
                });
            }
        }
    }
    out.flush()?;

    let manifest_path = args
        .manifest
        .clone()
        .unwrap_or_else(|| default_manifest_path(&args.out));
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        config_path: args.config.display().to_string(),
        experiments: &config.experiment,
        cells: manifest_cells,
    };
    let mf = BufWriter::new(File::create(&manifest_path)?);
    serde_json::to_writer_pretty(mf, &manifest)
        .map_err(|e| CliError::BadInput(format!("writing manifest: {e}")))?;

    eprintln!(
        "bench: {} cells ({failures} failed), results in {}, manifest in {}",
        outcomes.len(),
        args.out.display(),
        manifest_path.display()
    );
    Ok(())
}

fn default_manifest_path(out: &Path) -> PathBuf {
    let mut path = out.to_path_buf();
    path.set_extension("json");
    path
}
