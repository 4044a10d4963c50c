use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::Args;

use slope_core::{generate_dataset, write_csv, BetaScheme, DesignKind, Family, GenSpec, Response};

use crate::CliError;

#[derive(Args)]
pub struct GenArgs {
    /// Design kind.
    #[arg(long, default_value = "equicorrelated", value_parser = ["equicorrelated", "ar-chain"])]
    pub design: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: usize,
    /// True support size.
    #[arg(long)]
    pub k: usize,
    /// Correlation parameter.
    #[arg(long, default_value_t = 0.0)]
    pub rho: f64,
    #[arg(long, default_value = "gaussian")]
    pub family: String,
    /// Coefficient scheme (defaults to the family's standard choice).
    #[arg(long)]
    pub beta_scheme: Option<String>,
    /// Standard-deviation multiplier of the additive noise.
    #[arg(long, default_value_t = 1.0)]
    pub noise_scale: f64,
    /// Number of classes (multinomial only).
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV (predictors x1..xp plus response column y).
    #[arg(long, default_value = "data.csv")]
    pub out: PathBuf,
    /// Optional CSV of the true flattened coefficients.
    #[arg(long)]
    pub beta_out: Option<PathBuf>,
}

pub fn run(args: &GenArgs) -> Result<(), CliError> {
    let family: Family = args.family.parse()?;
    let design_kind: DesignKind = args.design.parse()?;
    let beta_scheme: BetaScheme = match &args.beta_scheme {
        Some(s) => s.parse()?,
        None => match family {
            Family::Multinomial => BetaScheme::MultinomialRowScatter,
            _ => BetaScheme::GaussianUnit,
        },
    };
    let spec = GenSpec {
        n: args.n,
        p: args.p,
        k: args.k,
        rho: args.rho,
        design_kind,
        family,
        beta_scheme,
        noise_scale: args.noise_scale,
        seed: args.seed,
        classes: args.classes,
    };
    let data = generate_dataset(&spec)?;

    let labels: Vec<f64> = match &data.response {
        Response::Gaussian { values, .. }
        | Response::Logistic { values }
        | Response::Poisson { values } => values.clone(),
        Response::Multinomial { labels, .. } => labels.iter().map(|&l| (l + 1) as f64).collect(),
    };
    write_csv(&args.out, &data.design, &labels, "y")?;

    if let Some(beta_path) = &args.beta_out {
        let mut out = BufWriter::new(File::create(beta_path)?);
        writeln!(out, "position,value")?;
        for (i, v) in data.beta_true.as_slice().iter().enumerate() {
            writeln!(out, "{i},{v}")?;
        }
    }
    eprintln!(
        "gen: {}x{} {} data set (checksum {:016x}) written to {}",
        args.n,
        args.p,
        args.family,
        data.checksum,
        args.out.display()
    );
    Ok(())
}
