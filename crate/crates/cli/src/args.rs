use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "tsvc",
    version,
    about = "Tree-structured varying coefficient models with post-selection confidence intervals"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model and write it as JSON.
    Fit(FitArgs),
    /// Compute confidence intervals for a fitted (or freshly fitted) model.
    Ci(CiArgs),
    /// Run a coverage simulation study.
    Simulate(SimulateArgs),
}

/// Data and model options shared by `fit` and `ci`.
#[derive(Debug, Args, Default)]
pub struct ModelArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Flat TOML file with default settings; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Outcome column (default: `y` if present, else the first column).
    #[arg(long)]
    pub outcome: Option<String>,
    /// `gaussian` or `binomial`.
    #[arg(long)]
    pub family: Option<String>,
    /// Maximum number of splits in the grown sequence.
    #[arg(long)]
    pub max_splits: Option<usize>,
    /// Minimum observations per leaf.
    #[arg(long)]
    pub min_node_size: Option<usize>,
    /// Covariates whose effects may vary (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub vary: Option<Vec<String>>,
    /// Covariates with a fixed, never partitioned effect.
    #[arg(long, value_delimiter = ',')]
    pub fixed: Option<Vec<String>>,
    /// Covariates used only as effect modifiers.
    #[arg(long, value_delimiter = ',')]
    pub modifier_only: Option<Vec<String>>,
    /// Allowed modifiers of one covariate, as `x1=x2+x3`; repeatable.
    #[arg(long = "modifiers")]
    pub modifiers: Option<Vec<String>>,
    /// `auto` (fast Gaussian updates) or `refit`.
    #[arg(long)]
    pub split_search: Option<String>,
    /// Discrete event-time column; expands the data to person-period rows.
    #[arg(long)]
    pub survival_time: Option<String>,
    /// Event indicator column (1 = event, 0 = censored).
    #[arg(long)]
    pub event: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Model document to write.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Optional text file for the tree rendering.
    #[arg(long)]
    pub tree: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CiArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Saved model document; without it the model is fitted first.
    #[arg(long = "model")]
    pub model_file: Option<PathBuf>,
    /// `wald`, `percentile`, `calibrated` (comma separated).
    #[arg(long = "method", value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    /// Confidence levels (comma separated).
    #[arg(long = "level", value_delimiter = ',')]
    pub levels: Option<Vec<f64>>,
    /// Bootstrap replicates.
    #[arg(long = "B")]
    pub b: Option<usize>,
    /// CI table (CSV).
    #[arg(long, short)]
    pub output: PathBuf,
    /// CI table (JSON, full precision).
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `linear`, `varying`, `varying_known_modifiers` (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub scenario: Option<Vec<String>>,
    /// Sample sizes (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Noise standard deviations (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub sigma: Option<Vec<f64>>,
    /// Replications per grid cell.
    #[arg(long = "R")]
    pub r: Option<usize>,
    /// Bootstrap replicates per replication.
    #[arg(long = "B")]
    pub b: Option<usize>,
    #[arg(long = "method", value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    #[arg(long = "level", value_delimiter = ',')]
    pub levels: Option<Vec<f64>>,
    /// Worker threads.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Coverage report (CSV).
    #[arg(long, short)]
    pub output: PathBuf,
    /// Coverage report (JSON).
    #[arg(long)]
    pub json: Option<PathBuf>,
}
