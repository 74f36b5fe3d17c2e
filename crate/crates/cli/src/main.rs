//! `consensus-certify`: simulate, certify and check consensus schedules.
//!
//! Exit codes: 0 ok, 2 config, 3 numerical, 4 condition unsatisfied,
//! 5 golden mismatch, 6 property failure.

mod commands;
mod config;
mod error;
mod output;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use consensus_core::experiments::{EdgeSense, TargetShape, WindowLayout};

use crate::error::CliError;

#[derive(Parser)]
#[command(name = "consensus-certify", version, about = "Consensus under intermittent communication")]
struct Cli {
    /// Worker threads for parallel work (default: all cores).
    #[arg(long, global = true, env = "CONSENSUS_CERTIFY_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a configured system and write the trajectory.
    Simulate(SimulateArgs),
    /// Check a connectivity condition and emit a rate certificate.
    Certify(CertifyArgs),
    /// Reproduce the chain-example comparison table.
    Table1(Table1Args),
    /// Run the second-order chain example.
    Example2(Example2Args),
    /// Run property suites.
    Check(CheckArgs),
    /// Generate a random schedule with a guaranteed persistent graph.
    Gen(GenArgs),
}

#[derive(Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the configured horizon.
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Overrides the configured step.
    #[arg(long)]
    pub step: Option<f64>,
    /// Trajectory CSV (default: config outputs, else trajectory.csv).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Metadata JSON (default: the CSV path with a .json extension).
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// SVG plot of states and diameters.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Keep every k-th grid point.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ConditionArg {
    Moreau,
    Pe,
    Isc,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SenseArg {
    Forward,
    Reverse,
}

impl From<SenseArg> for EdgeSense {
    fn from(s: SenseArg) -> Self {
        match s {
            SenseArg::Forward => EdgeSense::Forward,
            SenseArg::Reverse => EdgeSense::Reverse,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum LayoutArg {
    Literal,
    Sequential,
}

impl From<LayoutArg> for WindowLayout {
    fn from(l: LayoutArg) -> Self {
        match l {
            LayoutArg::Literal => WindowLayout::Literal,
            LayoutArg::Sequential => WindowLayout::Sequential,
        }
    }
}

#[derive(Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Window length T.
    #[arg(long = "window", alias = "T")]
    pub window: f64,
    /// Average threshold mu.
    #[arg(long = "threshold", alias = "mu")]
    pub threshold: f64,
    #[arg(long, value_enum, default_value = "moreau")]
    pub condition: ConditionArg,
    /// Use the sharper `(N-1)/N` exponent.
    #[arg(long)]
    pub proof_constant: bool,
    /// Orientation of a built-in second-example schedule.
    #[arg(long, value_enum)]
    pub edge_sense: Option<SenseArg>,
    /// Windows intersected for the persistent graph (default: from the period).
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Certificate JSON (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct Table1Args {
    #[arg(long, default_value_t = 3)]
    pub n_min: usize,
    #[arg(long, default_value_t = 10)]
    pub n_max: usize,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args)]
pub struct Example2Args {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.1)]
    pub beta: f64,
    /// Default `50 T`.
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    #[arg(long, value_enum, default_value = "reverse")]
    pub edge_sense: SenseArg,
    #[arg(long, value_enum, default_value = "sequential")]
    pub layout: LayoutArg,
    #[arg(long, default_value_t = 100)]
    pub stride: usize,
    #[arg(long, default_value = "example2_out")]
    pub out_dir: PathBuf,
}

#[derive(Args)]
pub struct CheckArgs {
    /// Suite name, or `all`.
    #[arg(long, default_value = "all")]
    pub suite: String,
    /// Cases per suite (default: each suite's own count).
    #[arg(long)]
    pub cases: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Rerun a single case.
    #[arg(long)]
    pub case: Option<u64>,
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long)]
    pub junit: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ShapeArg {
    Path,
    Star,
    Tree,
}

impl From<ShapeArg> for TargetShape {
    fn from(s: ShapeArg) -> Self {
        match s {
            ShapeArg::Path => TargetShape::Path,
            ShapeArg::Star => TargetShape::Star,
            ShapeArg::Tree => TargetShape::Tree,
        }
    }
}

#[derive(Args)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long = "window")]
    pub window: f64,
    #[arg(long = "threshold")]
    pub threshold: f64,
    #[arg(long, value_enum, default_value = "tree")]
    pub shape: ShapeArg,
    #[arg(long, default_value_t = 0.3)]
    pub extra_prob: f64,
    #[arg(long, default_value_t = 1)]
    pub periods: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("configuration error: --jobs must be positive");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(jobs);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("cannot start worker pool: {e}");
            return ExitCode::from(3);
        }
    };
    let result: Result<(), CliError> = pool.install(|| match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Certify(a) => commands::certify(a),
        Command::Table1(a) => commands::table1(a),
        Command::Example2(a) => commands::example2(a),
        Command::Check(a) => commands::check(a),
        Command::Gen(a) => commands::gen(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
