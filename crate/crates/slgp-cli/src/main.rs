//! `slgp`: simulate, fit and interrogate spatial logistic Gaussian process
//! density-field models from the command line.
//!
//! All subcommands are driven by a JSON config; individual flags override
//! config fields. Exit codes: 0 success, 2 config error, 3 data error,
//! 4 numeric failure.

mod artifacts;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use slgp::error::SlgpError;

use crate::commands::PredictArgs;
use crate::config::RunConfig;

#[derive(Parser)]
#[command(name = "slgp", version, about = "Spatial logistic Gaussian process density fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct CommonOverrides {
    /// Config file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Master seed controlling all randomness.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of Fourier frequencies.
    #[arg(long)]
    p: Option<usize>,
    /// Nodes per response dimension of the fitting grid.
    #[arg(long = "grid-m")]
    grid_m: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw prior density fields at configured locations.
    Simulate {
        #[command(flatten)]
        common: CommonOverrides,
        /// Number of prior draws.
        #[arg(long)]
        draws: Option<usize>,
    },
    /// MAP fit on a CSV dataset (optional lengthscale grid search).
    FitMap {
        #[command(flatten)]
        common: CommonOverrides,
    },
    /// pCN posterior sampling on a CSV dataset.
    FitMcmc {
        #[command(flatten)]
        common: CommonOverrides,
        /// pCN step size in (0, 1].
        #[arg(long)]
        beta: Option<f64>,
        /// Total chain iterations.
        #[arg(long)]
        iters: Option<usize>,
        /// Burn-in iterations.
        #[arg(long)]
        burnin: Option<usize>,
        /// Keep every thin-th draw after burn-in.
        #[arg(long)]
        thin: Option<usize>,
    },
    /// Posterior (or MAP) densities and quantiles at new locations.
    Predict {
        /// Fit artifact (fit.json) from fit-map or fit-mcmc.
        #[arg(long)]
        fit: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated station keys.
        #[arg(long)]
        stations: Option<String>,
        /// Semicolon-separated model-unit locations, e.g. "0.1,0.2;0.4,0.3".
        #[arg(long)]
        locations: Option<String>,
        /// Comma-separated quantile probabilities.
        #[arg(long)]
        probs: Option<String>,
        /// Nodes of the reporting grid.
        #[arg(long = "grid-m")]
        grid_m: Option<usize>,
    },
    /// Mean-power continuity rate experiment.
    Rates {
        #[command(flatten)]
        common: CommonOverrides,
    },
    /// Divergences between two density CSV files.
    Metrics {
        /// First density CSV.
        #[arg(long)]
        f: PathBuf,
        /// Second density CSV.
        #[arg(long)]
        g: PathBuf,
        /// Output JSON report.
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(common: &CommonOverrides) -> slgp::Result<RunConfig> {
    let mut config = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(p) = common.p {
        config.p = p;
    }
    if let Some(m) = common.grid_m {
        config.grid_m = vec![m; config.grid_m.len().max(1)];
    }
    config.validate()?;
    Ok(config)
}

fn parse_list(text: &str) -> slgp::Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| SlgpError::Config(format!("cannot parse number '{s}'")))
        })
        .collect()
}

fn parse_locations(text: &str) -> slgp::Result<Vec<Vec<f64>>> {
    text.split(';').filter(|s| !s.trim().is_empty()).map(parse_list).collect()
}

fn run() -> slgp::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate { common, draws } => {
            let mut config = load_config(&common)?;
            if let Some(d) = draws {
                config.n_draws = d;
            }
            commands::simulate(&config, &common.out)
        }
        Command::FitMap { common } => {
            let config = load_config(&common)?;
            commands::fit_map(&config, &common.out)
        }
        Command::FitMcmc { common, beta, iters, burnin, thin } => {
            let mut config = load_config(&common)?;
            if let Some(b) = beta {
                config.mcmc.beta = b;
            }
            if let Some(n) = iters {
                config.mcmc.n_iter = n;
            }
            if let Some(b) = burnin {
                config.mcmc.burn_in = b;
            }
            if let Some(t) = thin {
                config.mcmc.thin = t;
            }
            config.validate()?;
            commands::fit_mcmc(&config, &common.out)
        }
        Command::Predict { fit, out, stations, locations, probs, grid_m } => {
            let args = PredictArgs {
                fit,
                out,
                stations: stations
                    .map(|s| s.split(',').map(|k| k.trim().to_string()).collect())
                    .unwrap_or_default(),
                locations: locations.as_deref().map(parse_locations).transpose()?.unwrap_or_default(),
                probs: probs.as_deref().map(parse_list).transpose()?,
                grid_m,
            };
            commands::predict(&args)
        }
        Command::Rates { common } => {
            let config = load_config(&common)?;
            commands::rates(&config, &common.out)
        }
        Command::Metrics { f, g, out } => commands::metrics(&f, &g, &out),
    }
}

fn exit_code_for(err: &SlgpError) -> u8 {
    match err {
        SlgpError::Config(_) | SlgpError::InvalidParameter(_) | SlgpError::DimensionMismatch { .. } => 2,
        SlgpError::Data { .. } | SlgpError::Csv(_) | SlgpError::Io(_) | SlgpError::OutsideDomain(_) => 3,
        SlgpError::Numeric(_) | SlgpError::GridMismatch(_) => 4,
        SlgpError::Json(_) => 2,
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
