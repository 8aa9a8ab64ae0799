use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fcls_core::initializers::InitKind;
use fcls_core::lla::LlaMode;
use fcls_core::penalty::{PenaltyKind, TauSpec};

#[derive(Debug, Parser)]
#[command(name = "fcls", version, about = "Folded concave Laplacian spectral penalty: fitting, paths, simulations and self-checks")]
pub struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, env = "FCLS_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one model with the LLA algorithm.
    Fit(FitArgs),
    /// Fit along a log-spaced grid of tau values.
    Path(PathArgs),
    /// Run a Monte-Carlo scenario.
    Simulate(SimulateArgs),
    /// Run the randomized invariant suite.
    Check(CheckArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Shrinkage,
    Linear,
    Logistic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SampleKind {
    /// Rows are noisy copies of the edge vector; the estimate is their mean.
    Mean,
    /// Rows are `d`-dimensional observations; the estimate is the covariance.
    Covariance,
}

#[derive(Clone, Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    /// Edge-vector CSV with the estimate to shrink.
    #[arg(long)]
    pub bok: Option<PathBuf>,
    /// Raw samples behind the shrinkage estimate (enables CV initializers).
    #[arg(long)]
    pub samples: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "mean")]
    pub sample_kind: SampleKind,
    /// Design matrix CSV, one row per observation.
    #[arg(long)]
    pub x: Option<PathBuf>,
    /// Response column CSV.
    #[arg(long)]
    pub y: Option<PathBuf>,
    /// Node count; inferred from the column count when omitted.
    #[arg(long)]
    pub d: Option<usize>,
    /// Ridge added to the logistic loss.
    #[arg(long, default_value_t = 0.01)]
    pub ridge: f64,
}

#[derive(Clone, Debug, Args)]
pub struct InitArgs {
    /// zero | raw | hard-cv | soft-cv | lasso-cv
    #[arg(long, default_value = "hard-cv")]
    pub init: InitKind,
    /// Fixed threshold or Lasso level instead of cross-validation.
    #[arg(long)]
    pub init_gamma: Option<f64>,
    #[arg(long, default_value_t = fcls_core::initializers::DEFAULT_CV_FOLDS)]
    pub cv_folds: usize,
    /// Seed for cross-validation folds.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Debug, Args)]
pub struct PenaltyArgs {
    #[arg(long, default_value = "scad")]
    pub penalty: PenaltyKind,
    /// Shape parameter (default 2.1).
    #[arg(long)]
    pub a: Option<f64>,
}

#[derive(Clone, Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    /// A positive number or `auto` (tau_max of the initializer).
    #[arg(long)]
    pub tau: TauSpec,
    #[command(flatten)]
    pub init: InitArgs,
    /// Step cap.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, default_value = "two-step")]
    pub mode: LlaMode,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, Args)]
pub struct PathArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    #[command(flatten)]
    pub init: InitArgs,
    #[arg(long, default_value_t = fcls_core::lla::DEFAULT_GRID_POINTS)]
    pub points: usize,
    #[arg(long, default_value_t = fcls_core::lla::DEFAULT_GRID_DECADES)]
    pub decades: f64,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, default_value = "two-step")]
    pub mode: LlaMode,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, Args)]
pub struct SimulateArgs {
    /// Built-in scenario name, e.g. gaussian_seq_5 or linear_25.
    #[arg(long, conflicts_with = "scenario", required_unless_present = "scenario")]
    pub preset: Option<String>,
    /// Scenario JSON file.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',')]
    pub n_values: Option<Vec<usize>>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, Args)]
pub struct CheckArgs {
    /// Run a single check family.
    #[arg(long)]
    pub only: Option<String>,
    #[arg(long, default_value_t = 2022)]
    pub seed: u64,
    /// Print the JSON report instead of the text report.
    #[arg(long)]
    pub json: bool,
    /// Also write check_report.json into this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}
