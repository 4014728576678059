//! Command-line front end for the IMRED detector: synthetic data, energy
//! maps, training, evaluation and sensitivity ladders.

pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::RunConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "imred", version, about = "Impulse-based multi-resolution energy detector")]
pub struct Cli {
    /// TOML file of dotted keys; defaults apply to anything left out.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed, overriding `seed` in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory, overriding `io.out_dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Suppress the summary on stdout.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled synthetic dataset (dataset.csv).
    Synth {
        /// Draw both classes from the healthy parameters.
        #[arg(long)]
        null: bool,
    },
    /// Energy map of one signal (energy_map.csv, energy_map.pgm).
    Transform {
        #[arg(long)]
        data: PathBuf,
        /// Item id; the first item when omitted.
        #[arg(long)]
        id: Option<String>,
    },
    /// Select the region and threshold (model.txt).
    Train {
        #[arg(long)]
        data: PathBuf,
    },
    /// Score a dataset with a model or by cross-validation (report.csv, roc.csv).
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, conflicts_with = "cv")]
        model: Option<PathBuf>,
        /// Number of stratified folds.
        #[arg(long)]
        cv: Option<usize>,
        /// Add the Fourier-band and fixed-band baselines.
        #[arg(long)]
        baselines: bool,
    },
    /// Taylor residual ladder for the class perturbation (sensitivity.csv).
    Sensitivity,
}

/// Loads the config, applies command-line overrides and runs the command.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.io.out_dir));
    let ctx = commands::Context::new(cfg, out, cli.quiet);
    match cli.command {
        Command::Synth { null } => ctx.synth(null),
        Command::Transform { data, id } => ctx.transform(&data, id.as_deref()),
        Command::Train { data } => ctx.train(&data),
        Command::Eval { data, model, cv, baselines } => ctx.eval(&data, model.as_deref(), cv, baselines),
        Command::Sensitivity => ctx.sensitivity(),
    }
}
