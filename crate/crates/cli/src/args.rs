use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use renewal_core::montecarlo::{DEFAULT_SEED, DEFAULT_WORKERS};
use renewal_core::solver::DEFAULT_STEP;

#[derive(Debug, Parser)]
#[command(
    name = "renewal",
    version,
    about = "Expected number of transformed uniform draws until the running sum exceeds t"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the closed forms for the sum or product problem.
    Exact(ExactArgs),
    /// Solve the renewal equation on a grid and write the curve.
    Solve(SolveArgs),
    /// Print the asymptote constants mu, sigma², c, slope and intercept.
    Asympt(AsymptArgs),
    /// Estimate E[K] or the expected stopped sum by simulation.
    Simulate(SimulateArgs),
    /// Histogram the overshoot of the stopped sum over t.
    Overshoot(OvershootArgs),
    /// Run the verification suite and report PASS/FAIL per check.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    /// Draws from [1, e] until the product exceeds e^t.
    Product,
    /// Draws from [0, 1] until the sum exceeds t.
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    /// The stopping time K.
    N,
    /// The stopped sum.
    StoppedSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    All,
    Bijections,
    ClosedForms,
    Solver,
    Simulation,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[arg(long, value_enum)]
    pub target: Target,
    #[arg(long)]
    pub t: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// `identity`, `logproduct`, `power:<p>`, or a knot file path.
    #[arg(long = "f")]
    pub spec: String,
    #[arg(long)]
    pub t_max: f64,
    #[arg(long, default_value_t = DEFAULT_STEP)]
    pub step: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct AsymptArgs {
    #[arg(long = "f")]
    pub spec: String,
    /// Absolute quadrature tolerance.
    #[arg(long, default_value_t = renewal_core::bijections::DEFAULT_ABS_TOL)]
    pub tol: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long = "f")]
    pub spec: String,
    #[arg(long)]
    pub t: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    /// Base seed; overrides RENEWAL_SEED.
    #[arg(long, env = "RENEWAL_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Parallel substreams; results depend on this value.
    #[arg(long, default_value_t = DEFAULT_WORKERS)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, value_enum, default_value_t = Quantity::N)]
    pub quantity: Quantity,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct OvershootArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    pub suite: Suite,
    /// Grid spacing for the solver checks.
    #[arg(long, default_value_t = DEFAULT_STEP)]
    pub step: f64,
    /// Sample count for the simulation checks.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, env = "RENEWAL_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_WORKERS)]
    pub workers: usize,
}
