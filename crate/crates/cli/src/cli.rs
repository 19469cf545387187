//! Command-line surface: flag definitions and dispatch.

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands;

#[derive(Parser)]
#[command(
    name = "skpca",
    version,
    about = "Sparse kernel principal components for one-class outlier detection"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a detector on the inlier class and save the model
    Fit(commands::FitCmd),
    /// Score rows with a saved model
    Score(commands::ScoreCmd),
    /// Fit on a seeded split and report F1, ROC and AUROC
    Eval(commands::EvalCmd),
    /// F1/AUROC-vs-sparsity sweep over an L1-ratio grid
    Sweep(commands::SweepCmd),
    /// Repeated seeded resampling trials with baselines
    Trials(commands::TrialsCmd),
    /// Subset representability probe
    Probe(commands::ProbeCmd),
    /// Generate a synthetic labeled dataset CSV
    Synth(commands::SynthCmd),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DataFormat {
    Csv,
    Idx,
}

/// Input-selection flags shared by every data-consuming command.
#[derive(Debug, Args, Clone)]
pub struct DataArgs {
    /// Data file: labeled CSV with a header row, or IDX images
    #[arg(long)]
    pub data: PathBuf,

    /// Input format
    #[arg(long, value_enum, default_value = "csv")]
    pub format: DataFormat,

    /// IDX labels file (required with --format idx)
    #[arg(long)]
    pub labels_file: Option<PathBuf>,

    /// CSV label column name
    #[arg(long)]
    pub label_col: Option<String>,

    /// Inlier class label
    #[arg(long)]
    pub inlier: Option<String>,

    /// Outlier class label, or "rest" for everything else
    #[arg(long)]
    pub outlier: Option<String>,
}

/// Model hyperparameter flags shared by fit/eval/sweep/trials.
#[derive(Debug, Args, Clone)]
pub struct ModelArgs {
    /// Number of kernel principal components
    #[arg(long)]
    pub pcs: Option<usize>,

    /// Sparsity knob: per-component L1 weight over the ridge weight
    #[arg(long)]
    pub l1_ratio: Option<f64>,

    /// Fixed ridge weight (omit for the spectral auto scale)
    #[arg(long)]
    pub ridge: Option<f64>,

    /// Fixed RBF bandwidth sigma^2
    #[arg(long, conflicts_with = "sigma_auto")]
    pub sigma_sq: Option<f64>,

    /// Estimate sigma^2 as the mean pairwise squared distance (default)
    #[arg(long)]
    pub sigma_auto: bool,

    /// Training-quantile used for the decision threshold
    #[arg(long)]
    pub threshold_quantile: Option<f64>,

    /// Cap on alternation iterations
    #[arg(long)]
    pub max_outer_iter: Option<usize>,

    /// Seed for all randomness in the command
    #[arg(long)]
    pub seed: Option<u64>,

    /// JSON config file; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Split-size flags for protocol commands.
#[derive(Debug, Args, Clone)]
pub struct SplitArgs {
    /// Training inliers drawn from the pool
    #[arg(long)]
    pub train_count: Option<usize>,

    /// Test inliers drawn from the pool
    #[arg(long)]
    pub test_inliers: Option<usize>,

    /// Test outliers drawn from the pool
    #[arg(long)]
    pub test_outliers: Option<usize>,
}

pub fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Fit(c) => commands::fit(c),
        Command::Score(c) => commands::score(c),
        Command::Eval(c) => commands::eval(c),
        Command::Sweep(c) => commands::sweep(c),
        Command::Trials(c) => commands::trials(c),
        Command::Probe(c) => commands::probe(c),
        Command::Synth(c) => commands::synth(c),
    }
}
