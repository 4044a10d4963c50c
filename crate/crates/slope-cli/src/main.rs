mod bench;
mod fit;
mod gen;

use clap::{Parser, Subcommand};

/// Exit codes: 0 success, 1 bad input, 2 solver failure.
#[derive(Debug)]
pub enum CliError {
    BadInput(String),
    Solver(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::BadInput(_) => 1,
            CliError::Solver(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::BadInput(m) | CliError::Solver(m) => m,
        }
    }
}

impl From<slope_core::SlopeError> for CliError {
    fn from(e: slope_core::SlopeError) -> Self {
        use slope_core::SlopeError::*;
        match e {
            AllStepsFailed | StepSizeUnderflow | NonFinite(_) => CliError::Solver(e.to_string()),
            other => CliError::BadInput(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::BadInput(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "slope",
    version,
    about = "Sorted-L1 penalized estimation with strong-rule predictor screening"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a regularization path to a data file and write a JSON report.
    Fit(fit::FitArgs),
    /// Generate a seeded synthetic data set and write it as CSV.
    Gen(gen::GenArgs),
    /// Run a benchmark experiment matrix and write long-format CSV results.
    Bench(bench::BenchArgs),
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(args) => fit::run(&args),
        Command::Gen(args) => gen::run(&args),
        Command::Bench(args) => bench::run(&args),
    };
    if let Err(e) = result {
        eprintln!("error: {}", e.message());
        std::process::exit(e.code());
    }
}
