//! Command-line front end for `blockcap`.
//!
//! Exit codes: 0 on success, 2 for usage, configuration, parse and dimension
//! errors, 3 for numerical failures. Outputs are written only after the whole
//! command has succeeded.

// `!(x > 0.0)` style checks are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod matrix_file;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<blockcap::Error> for CliError {
    fn from(e: blockcap::Error) -> Self {
        use blockcap::Error as E;
        match e {
            E::NotPositiveDefinite { .. } | E::DegenerateColumn { .. } | E::LineSearchFailed { .. } | E::NonFinite(_) => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "blockcap", version, about = "Capacity-optimized sensing matrices for block-sparse recovery")]
pub struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize a sensing model described by a config file.
    Design(DesignArgs),
    /// Per-pair sensing capacities of a matrix.
    Capacity(CapacityArgs),
    /// Exact block restricted isometry constant of a matrix.
    Ric(RicArgs),
    /// Recover a block-sparse signal from measurements.
    Recover(RecoverArgs),
    /// Success-rate curves for labeled matrices.
    Benchmark(BenchmarkArgs),
    /// Reconstruct one scene with the baseline and optimized matrices.
    Demo(DemoArgs),
}

#[derive(Debug, Args)]
pub struct BlockArgs {
    /// Number of equal contiguous blocks.
    #[arg(long, conflicts_with_all = ["blocks_file", "config"])]
    pub blocks: Option<usize>,
    /// JSON block specification.
    #[arg(long, conflicts_with = "config")]
    pub blocks_file: Option<PathBuf>,
    /// Take the block structure from a run config.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CapacityArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[command(flatten)]
    pub blocks: BlockArgs,
    #[arg(long, default_value_t = blockcap::DEFAULT_BETA)]
    pub beta: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RicArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[command(flatten)]
    pub blocks: BlockArgs,
    /// Blocks per support.
    #[arg(long, short = 't', default_value_t = 2)]
    pub t: usize,
    /// Refuse to enumerate more supports than this.
    #[arg(long, default_value_t = blockcap::capacity::DEFAULT_ENUMERATION_CAP)]
    pub cap: u128,
    #[arg(long, default_value_t = blockcap::DEFAULT_BETA)]
    pub beta: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Joint,
    L1,
}

#[derive(Debug, Args)]
pub struct RecoverArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    /// Measurement vector file.
    #[arg(long)]
    pub y: PathBuf,
    #[command(flatten)]
    pub blocks: BlockArgs,
    /// Residual bound; defaults to 1e-8 |y|.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Ground-truth signal, for scoring.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SolverArg::Joint)]
    pub solver: SolverArg,
    #[arg(long, default_value_t = blockcap::recovery::DEFAULT_SUCCESS_TOL)]
    pub tol_success: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// `LABEL=PATH`, repeatable.
    #[arg(long = "matrix", required = true)]
    pub matrices: Vec<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub tol_success: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Optimized matrix; designed from the config when omitted.
    #[arg(long)]
    pub optimized: Option<PathBuf>,
    #[arg(long)]
    pub tol_success: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        // Fails harmlessly if a pool already exists in this process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Design(a) => commands::design(&a),
        Command::Capacity(a) => commands::capacity(&a),
        Command::Ric(a) => commands::ric(&a),
        Command::Recover(a) => commands::recover(&a),
        Command::Benchmark(a) => commands::benchmark(&a),
        Command::Demo(a) => commands::demo(&a),
    }
}
