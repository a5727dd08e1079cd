//! `rankcompat`: synthetic data, model training, compatibility metrics,
//! and the full update-experiment workflow from one binary.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/file error, 3 numeric or
//! degenerate-input error.

mod commands;
mod config;
mod grid;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "rankcompat", version, about = "Rank-based compatibility toolkit for risk-model updates")]
pub struct Cli {
    /// JSON config file with train / split / candidates / synth sections;
    /// flags override file values
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Base RNG seed (falls back to RANKCOMPAT_SEED, then 0)
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Write a synthetic class-conditional Gaussian dataset as CSV
    GenData(GenDataArgs),
    /// Partition a dataset CSV into the five experiment files
    Split(SplitArgs),
    /// Train a logistic risk model (weighted objective when alpha < 1)
    Train(TrainArgs),
    /// Report AUROC / RBC / BTC / POP table for a model-pair on a dataset
    Evaluate(EvaluateArgs),
    /// Run replicated update experiments and write summary, scatter, SVG
    UpdateExperiment(UpdateExperimentArgs),
    /// Emit combination-count curves for RBC values at fixed AUROCs
    Combinatorics(CombinatoricsArgs),
    /// Sweep decision thresholds and report max-achievable BTC per cell
    BtcSweep(BtcSweepArgs),
}

#[derive(Args)]
pub struct SynthFlags {
    /// Number of rows
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of feature columns
    #[arg(long)]
    pub d: Option<usize>,
    /// Positive-label probability
    #[arg(long)]
    pub prevalence: Option<f64>,
    /// Mean gap between the class-conditional Gaussians
    #[arg(long)]
    pub class_separation: Option<f64>,
    /// Trailing feature columns carrying no signal
    #[arg(long)]
    pub noise_features: Option<usize>,
    /// Constant offset added to informative-feature means
    #[arg(long)]
    pub shift: Option<f64>,
}

#[derive(Args)]
pub struct GenDataArgs {
    #[command(flatten)]
    pub synth: SynthFlags,
    /// Output CSV path
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SplitArgs {
    /// Input dataset CSV
    #[arg(long, value_name = "PATH")]
    pub data: PathBuf,
    /// Rows allocated to the original-model dataset
    #[arg(long)]
    pub n_original: Option<usize>,
    /// Rows allocated to the updated-model dataset
    #[arg(long)]
    pub n_updated: Option<usize>,
    /// Development fraction of each model dataset
    #[arg(long)]
    pub dev_fraction: Option<f64>,
    /// Directory for the five partition CSVs
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

#[derive(Args)]
pub struct TrainFlags {
    /// Ranking-sigmoid sharpness
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    /// Epochs without validation improvement before stopping
    #[arg(long)]
    pub patience: Option<usize>,
}

#[derive(Args)]
pub struct TrainArgs {
    /// Development dataset CSV
    #[arg(long, value_name = "PATH")]
    pub dev: PathBuf,
    /// Validation dataset CSV
    #[arg(long, value_name = "PATH")]
    pub val: PathBuf,
    /// Original model JSON (required when alpha < 1)
    #[arg(long, value_name = "PATH")]
    pub orig: Option<PathBuf>,
    /// Weight on binary cross-entropy (1 - alpha on the rank term)
    #[arg(long)]
    pub alpha: Option<f64>,
    /// L2 regularization strength
    #[arg(long)]
    pub reg_l2: Option<f64>,
    #[command(flatten)]
    pub train: TrainFlags,
    /// Output model JSON path
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct EvaluateArgs {
    /// Original model JSON
    #[arg(long, value_name = "PATH")]
    pub orig: PathBuf,
    /// Updated model JSON
    #[arg(long, value_name = "PATH")]
    pub updated: PathBuf,
    /// Evaluation dataset CSV
    #[arg(long, value_name = "PATH")]
    pub data: PathBuf,
    /// Original-model decision threshold for BTC
    #[arg(long, default_value_t = 0.5)]
    pub tau_o: f64,
    /// Updated-model decision threshold for BTC
    #[arg(long, default_value_t = 0.5)]
    pub tau_u: f64,
}

#[derive(Args)]
pub struct UpdateExperimentArgs {
    /// Dataset CSV; omitted means a synthetic dataset is generated
    #[arg(long, value_name = "PATH")]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub synth: SynthFlags,
    #[command(flatten)]
    pub train: TrainFlags,
    #[arg(long)]
    pub n_original: Option<usize>,
    #[arg(long)]
    pub n_updated: Option<usize>,
    #[arg(long)]
    pub dev_fraction: Option<f64>,
    /// Bootstrap variants in the BCE pool
    #[arg(long)]
    pub n_resample: Option<usize>,
    /// Reshuffle variants in the BCE pool
    #[arg(long)]
    pub n_shuffle: Option<usize>,
    /// Regularization grid, e.g. `0.1,0.01,0.001`
    #[arg(long)]
    pub reg_grid: Option<String>,
    /// Training-weight grid, e.g. `0..1` or `0,0.5,1`
    #[arg(long, default_value = "0..1")]
    pub alphas: String,
    /// Selection-weight grid
    #[arg(long, default_value = "0..1")]
    pub betas: String,
    #[arg(long, default_value_t = 40)]
    pub replications: usize,
    /// Worker threads (0 = one per core); output is identical for any value
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Directory for summary.csv, scatter.csv, scatter.svg
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

#[derive(Args)]
pub struct CombinatoricsArgs {
    /// Total patient-pair count
    #[arg(long, default_value_t = 400)]
    pub m: u64,
    /// Original-model AUROC
    #[arg(long, default_value_t = 0.65)]
    pub auroc_o: f64,
    /// Updated-model AUROCs, list or range
    #[arg(long, default_value = "0.65,0.75,0.85,0.95")]
    pub auroc_u: String,
    /// Directory for nu_curves.csv and nu_curves.svg
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

#[derive(Args)]
pub struct BtcSweepArgs {
    /// Dataset CSV; omitted means a synthetic dataset is generated
    #[arg(long, value_name = "PATH")]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub synth: SynthFlags,
    #[command(flatten)]
    pub train: TrainFlags,
    #[arg(long)]
    pub n_original: Option<usize>,
    #[arg(long)]
    pub n_updated: Option<usize>,
    #[arg(long)]
    pub dev_fraction: Option<f64>,
    #[arg(long)]
    pub n_resample: Option<usize>,
    #[arg(long)]
    pub n_shuffle: Option<usize>,
    #[arg(long)]
    pub reg_grid: Option<String>,
    /// Original-model threshold grid (default: fine near 0, coarse above)
    #[arg(long)]
    pub tau_o_grid: Option<String>,
    /// Updated-model threshold grid
    #[arg(long)]
    pub tau_u_grid: Option<String>,
    #[arg(long, default_value_t = 5)]
    pub replications: usize,
    /// Directory for btc_grid.csv and btc_grid.svg
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

/// Errors at the CLI layer, keyed to exit codes.
pub enum CliError {
    Usage(String),
    Core(rankcompat::Error),
}

impl From<rankcompat::Error> for CliError {
    fn from(e: rankcompat::Error) -> Self {
        CliError::Core(e)
    }
}

/// 2 for data/file problems, 3 for numeric or degenerate conditions.
fn core_exit_code(e: &rankcompat::Error) -> u8 {
    use rankcompat::Error::*;
    match e {
        Io { .. } | ParseError { .. } | SchemaError { .. } | LengthMismatch { .. }
        | DimensionMismatch { .. } | SpecTooLarge { .. } | InvalidConfig { .. }
        | MissingOriginal { .. } => 2,
        SingleClass { .. } | OriginalAllWrong { .. } | OriginalNoCorrectPairs
        | NoOrderedPairs | OutOfRegime { .. } | NonFiniteScore { .. } | NonFiniteValue { .. }
        | EmptyCandidates | TooFewReplications { .. } | EmptyInput { .. }
        | InfeasibleCounts { .. } => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run with --help for usage");
            ExitCode::from(1)
        }
        Err(CliError::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(core_exit_code(&e))
        }
    }
}
