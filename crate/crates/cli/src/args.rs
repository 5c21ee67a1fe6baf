use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::PathBuf;

/// Transport flows on metric graphs.
///
/// Graph and state arguments take a path or `fixture:<name>` for a shipped
/// fixture. Set NETFLOW_THREADS to cap the number of worker threads.
#[derive(Parser, Debug)]
#[command(name = "netflow", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evolve a state exactly (unit or rational velocities).
    Simulate(SimulateArgs),
    /// Evolve with absorption via the truncated Dyson-Phillips series.
    Absorb(AbsorbArgs),
    /// Evaluate the resolvent (lambda - A)^{-1} f on a sample grid.
    Resolvent(ResolventArgs),
    /// Convergence table for rational approximations of the velocities.
    Approx(ApproxArgs),
    /// Run the randomised invariant suite and re-validate the fixtures.
    Check(CheckArgs),
    /// Check column stochasticity and report loops, parallel edges and sinks.
    Validate(ValidateArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub state: PathBuf,
    /// Exact time `p/q`.
    #[arg(long)]
    pub t: String,
    /// Number of sample intervals in the CSV.
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    /// Run-log entries are written at `k t / log_steps`.
    #[arg(long, default_value_t = 4)]
    pub log_steps: usize,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct AbsorbArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub state: PathBuf,
    /// State file holding the absorption rates.
    #[arg(long)]
    pub rates: PathBuf,
    #[arg(long)]
    pub t: String,
    /// Series order K.
    #[arg(long, default_value_t = 8)]
    pub order: usize,
    #[arg(long, default_value_t = 256)]
    pub quad_steps: usize,
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    #[arg(long, default_value_t = 1)]
    pub log_steps: usize,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ResolventMode {
    Unit,
    General,
}

#[derive(Args, Debug, Serialize)]
pub struct ResolventArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub state: PathBuf,
    /// `re` or `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: String,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    #[arg(long, value_enum, default_value_t = ResolventMode::Unit)]
    pub mode: ResolventMode,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Cf,
    Dec,
}

#[derive(Args, Debug, Serialize)]
pub struct ApproxArgs {
    /// Graph with `c` lines for every edge.
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub state: PathBuf,
    /// Test functions, one state block each; unit on every edge by default.
    #[arg(long)]
    pub tests: Option<PathBuf>,
    #[arg(long)]
    pub t: String,
    #[arg(long, default_value = "1")]
    pub lambda: String,
    /// Comma-separated levels; 2..=7 by default.
    #[arg(long, value_delimiter = ',')]
    pub levels: Vec<usize>,
    #[arg(long, value_enum, default_value_t = MethodArg::Cf)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct CheckArgs {
    /// One of semigroup, oracle, resolvent, approximation, absorption, lazy, all.
    #[arg(long, default_value = "all")]
    pub suite: String,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Directory for `check.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct ValidateArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Directory for `validate.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
