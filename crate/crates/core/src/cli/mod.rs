//! The `online-em` command-line front end.
//!
//! ```text
//! online-em simulate   --model poisson-mix --weights 0.8,0.2 --means 1,3 --n 1000 --seed 7 --out data.csv
//! online-em fit        --model poisson-mix --data data.csv --init-means 0.5,4 --algo online --alpha 0.6 --avg-start 0.5
//! online-em compare    --model poisson-mix --data data.csv --init-means 0.5,4 --algos batch,online,incremental --tours 5 --iters 5 --alpha 0.6
//! online-em experiment plans/poisson_tours.plan --out poisson_tours --workers 8
//! ```
//!
//! `simulate`, `fit` and `compare` also accept `--config run.json` (see
//! [`RunConfig`]); flags override file values. Exit codes: 0 success,
//! 2 configuration error, 3 data error, 4 numerical failure. Log verbosity
//! is read from `ONLINE_EM_LOG` (e.g. `ONLINE_EM_LOG=info`).

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{DataSection, ModelKind, ModelSection, OutputSection, RecordMode, RunConfig, TrajectoryFormat};

use crate::error::Error;
use crate::estimators::ScanMode;
use crate::harness::Algorithm;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// The exit code reported for `err`.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Argument(_) | Error::Unsupported(_) | Error::Json(_) => EXIT_CONFIG,
        Error::Data(_) | Error::Observation(_) | Error::Io(_) | Error::Csv(_) => EXIT_DATA,
        Error::Domain(_) | Error::Inadmissible(_) | Error::Replications { .. } => EXIT_NUMERICAL,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "online-em",
    version,
    about = "Online EM and related estimators for latent-variable models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a data set from a model and write it as CSV.
    Simulate(SimulateArgs),
    /// Fit one estimator to a data set and write its trajectory.
    Fit(FitArgs),
    /// Run a replicated experiment plan and write its report.
    Experiment(ExperimentArgs),
    /// Fit several estimators to one data set and write a merged report.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    #[arg(long = "model", value_enum)]
    pub kind: Option<ModelKind>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Generating PPCA loading.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub u: Option<Vec<f64>>,
    /// Generating PPCA noise variance.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Generating mixture weights.
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    /// Generating Poisson means.
    #[arg(long, value_delimiter = ',')]
    pub means: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub init_u: Option<Vec<f64>>,
    #[arg(long)]
    pub init_lambda: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub init_weights: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub init_means: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct DataArgs {
    /// CSV data set.
    #[arg(long = "data")]
    pub data_path: Option<PathBuf>,
    /// Number of observations to simulate instead of reading a file.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EstimatorArgs {
    #[arg(long = "algo", value_enum)]
    pub algorithm: Option<Algorithm>,
    #[arg(long)]
    pub name: Option<String>,
    /// Stepsize exponent, `gamma_n = n^-alpha`.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Steps without an M-step at the start.
    #[arg(long)]
    pub freeze: Option<u64>,
    #[arg(long)]
    pub minibatch: Option<usize>,
    /// Batch-EM iterations.
    #[arg(long = "iters")]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub tours: Option<usize>,
    #[arg(long, value_enum)]
    pub scan: Option<ScanMode>,
    #[arg(long)]
    pub scan_seed: Option<u64>,
    /// Start Polyak-Ruppert averaging after this fraction of the steps.
    #[arg(long = "avg-start")]
    pub averaging_start: Option<f64>,
    /// Conjugate-prior statistic (MAP mode), in statistic coordinates.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub prior: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    /// Main output file (default: standard output).
    #[arg(long = "out")]
    pub out_path: Option<PathBuf>,
    /// JSON summary file (default: standard output).
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<TrajectoryFormat>,
    /// Which steps to keep in the trajectory.
    #[arg(long, value_enum)]
    pub record: Option<RecordMode>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV; a metadata file `<out>.json` is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Algorithms to compare; shared flags apply where relevant.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub algos: Option<Vec<Algorithm>>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Experiment plan (JSON).
    pub plan: PathBuf,
    /// Output prefix: writes `<out>.csv` and `<out>.json` (default: CSV on
    /// standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Override the plan's master seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Initialise logging from `ONLINE_EM_LOG` (default `warn`).
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("ONLINE_EM_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Parse `args` (including the program name), run the command and return
/// its exit code. Errors are reported on standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(command: Command) -> crate::Result<()> {
    match command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Fit(a) => commands::fit(a),
        Command::Experiment(a) => commands::experiment(a),
        Command::Compare(a) => commands::compare(a),
    }
}
