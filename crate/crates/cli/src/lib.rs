//! `csmri` experiments: every command reads one flat `key=value` config,
//! writes the fully resolved config beside its outputs, and produces
//! CSV/PTF/PGM files only.
//!
//! Commands share an output root: `simulate` writes `dataset/`, `train`
//! reads it and writes `train/`, `reconstruct` reads both and writes
//! `reconstruct/`, `barcode` writes `barcode/`.

mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use commands::{cmd_barcode, cmd_reconstruct, cmd_rf, cmd_simulate, cmd_train, ModelSource};
pub use config::{ExperimentConfig, Precision};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("no dataset in {0} (run `simulate` first)")]
    MissingDataset(PathBuf),
    #[error("no trained model in {0} (run `train` first)")]
    MissingModel(PathBuf),
    #[error(transparent)]
    Pipeline(#[from] csmri_pipeline::PipelineError),
    #[error(transparent)]
    Unet(#[from] csmri_unet::UnetError),
    #[error(transparent)]
    Kspace(#[from] csmri_kspace::KspaceError),
    #[error(transparent)]
    Homology(#[from] csmri_homology::HomologyError),
    #[error(transparent)]
    Io(#[from] csmri_io::IoError),
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "csmri", version, about = "Artifact-learning reconstruction experiments on simulated MR data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Flat key=value experiment config; defaults are used for absent keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "results")]
    pub out: PathBuf,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Run networks in f64 (deterministic test mode).
    #[arg(long, global = true)]
    pub f64: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate phantoms, the sampling mask and test pairs.
    Simulate,
    /// Train the magnitude network, then optionally the phase network.
    Train,
    /// Reconstruct the test phantoms and report NMSE.
    Reconstruct {
        /// Use the true artifacts instead of networks.
        #[arg(long, conflicts_with = "zero_model")]
        oracle: bool,
        /// Predict zero artifact (zero-filled baseline).
        #[arg(long)]
        zero_model: bool,
        /// Training output directory, `<out>/train` by default.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Persistence barcodes of the image and artifact manifolds.
    Barcode,
    /// Per-layer receptive-field table of the configured network.
    Rf,
}

impl Cli {
    pub fn resolve_config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.set_seed(s);
        }
        if self.f64 {
            cfg.precision = Precision::F64;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = cli.resolve_config()?;
    match &cli.command {
        Command::Simulate => cmd_simulate(&cfg, &cli.out),
        Command::Train => cmd_train(&cfg, &cli.out),
        Command::Reconstruct { oracle, zero_model, model } => {
            let source = if *oracle {
                ModelSource::Oracle
            } else if *zero_model {
                ModelSource::Zero
            } else {
                ModelSource::Trained(model.clone().unwrap_or_else(|| cli.out.join("train")))
            };
            cmd_reconstruct(&cfg, &cli.out, &source).map(|_| ())
        }
        Command::Barcode => cmd_barcode(&cfg, &cli.out).map(|_| ()),
        Command::Rf => {
            print!("{}", cmd_rf(&cfg, Some(&cli.out))?);
            Ok(())
        }
    }
}
