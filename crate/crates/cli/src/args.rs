use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use roblasso::PenaltyScale;

#[derive(Debug, Parser)]
#[command(
    name = "roblasso",
    version,
    about = "Outlier-robust square-root lasso regression"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the robust estimator to a CSV dataset and write a JSON report.
    Fit(FitArgs),
    /// Calibrate the penalty by Monte-Carlo simulation on a CSV design.
    Calibrate(CalibrateArgs),
    /// Run a contaminated-regression Monte-Carlo study.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Gaussian,
    Subgaussian,
    Subexponential,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    /// Threshold lambda * sigma / sqrt(n).
    Concentrated,
    /// Threshold lambda * sigma / (2 sqrt(n)).
    JointObjective,
}

impl From<ScaleArg> for PenaltyScale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Concentrated => PenaltyScale::Concentrated,
            ScaleArg::JointObjective => PenaltyScale::JointObjective,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PenaltyArgs {
    /// Fixed penalty level.
    #[arg(long, conflicts_with = "penalty_rule")]
    pub lambda: Option<f64>,

    /// Penalty rule [default: gaussian].
    #[arg(long, value_enum)]
    pub penalty_rule: Option<RuleArg>,

    /// Multiplier of the closed-form rule [default: 1.005 for gaussian, 1 otherwise].
    #[arg(long, conflicts_with = "lambda")]
    pub c: Option<f64>,

    /// Number of Monte-Carlo draws for the monte-carlo rule.
    #[arg(long, default_value_t = 1000)]
    pub mc_draws: usize,

    /// Quantile level for the monte-carlo rule.
    #[arg(long, default_value_t = 0.95)]
    pub mc_level: f64,

    /// Which threshold scale the penalty enters with.
    #[arg(long, value_enum, default_value_t = ScaleArg::Concentrated)]
    pub penalty_scale: ScaleArg,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,

    /// Relative objective change that stops the iteration.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// CSV with a header row and a `y` column; other columns are regressors.
    #[arg(long)]
    pub input: PathBuf,

    /// JSON report path; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,

    /// Prepend a column of ones to the regressors.
    #[arg(long)]
    pub intercept: bool,

    #[command(flatten)]
    pub penalty: PenaltyArgs,

    #[command(flatten)]
    pub solver: SolverArgs,

    /// Confidence level of the reported intervals.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,

    /// Seed of the monte-carlo penalty rule.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateArgs {
    /// CSV design; a `y` column, if present, is ignored.
    #[arg(long)]
    pub input: PathBuf,

    /// Optional JSON copy of the result.
    #[arg(long)]
    pub output: Option<PathBuf>,

    #[arg(long)]
    pub intercept: bool,

    #[arg(long, default_value_t = 1000)]
    pub mc_draws: usize,

    #[arg(long, default_value_t = 0.95)]
    pub mc_level: f64,

    /// Multiplier of the gaussian closed form shown alongside.
    #[arg(long, default_value_t = 1.005)]
    pub c: f64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 100)]
    pub n: usize,

    /// Contamination probability.
    #[arg(long, default_value_t = 0.025)]
    pub p: f64,

    #[arg(long, default_value_t = 1000)]
    pub reps: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = 5.0)]
    pub outlier_scale: f64,

    /// True intercept and slope.
    #[arg(long, num_args = 2, value_names = ["B1", "B2"], default_values_t = [0.0, 0.0])]
    pub beta: Vec<f64>,

    #[command(flatten)]
    pub penalty: PenaltyArgs,

    #[command(flatten)]
    pub solver: SolverArgs,

    /// Table CSV path; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,

    /// JSON report path.
    #[arg(long)]
    pub json: Option<PathBuf>,

    /// Per-replication CSV path.
    #[arg(long)]
    pub raw: Option<PathBuf>,
}
