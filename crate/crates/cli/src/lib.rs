//! `stochplan`: command line front end and local JSON service for the
//! stochastic flight-plan workbench.
//!
//! Each subcommand reads an optional TOML config, applies flag overrides,
//! runs one pipeline from `stochplan-core` and commits a run directory to
//! the store. Exit codes: 0 success, 1 I/O or internal failure, 2 config
//! error, 3 infeasible inputs.

pub mod commands;
pub mod config;
pub mod error;
pub mod server;
pub mod store;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stochplan_core::stochastic::Criterion;

pub use error::CliError;
pub use store::{RunManifest, Store};

#[derive(Debug, Parser)]
#[command(name = "stochplan", version, about = "Stochastic flight-plan optimization workbench")]
pub struct Cli {
    /// Run store root [env: STOCHPLAN_STORE, default: ./runs]
    #[arg(long, global = true)]
    pub store: Option<PathBuf>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML config file; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the seed the command draws from.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run directory name; derived from the command and config hash when omitted.
    #[arg(long)]
    pub run_id: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic ensemble and nowcast for the configured flight
    /// and write them as WGRD1 grids.
    GenWeather {
        #[command(flatten)]
        common: Common,
    },
    /// Deterministic plan on the control forecast.
    Plan {
        #[command(flatten)]
        common: Common,
        /// Payload in kg, replacing the configured mean.
        #[arg(long)]
        payload: Option<f64>,
        /// Read the ensemble from a directory written by gen-weather.
        #[arg(long)]
        weather_dir: Option<PathBuf>,
    },
    /// Two-pass stochastic plan: candidates, cost matrix and selection.
    Splan {
        #[command(flatten)]
        common: Common,
        /// expected_value (alias expected) or minimax
        #[arg(long)]
        criterion: Option<Criterion>,
        /// Number of representative payload values; 1 plans on weather only.
        #[arg(long)]
        payload_k: Option<usize>,
        #[arg(long)]
        payload: Option<f64>,
        #[arg(long)]
        weather_dir: Option<PathBuf>,
    },
    /// Deterministic versus stochastic plans scored against the nowcast.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        flights: Option<usize>,
    },
    /// Fixed-payload versus uncertain-payload stochastic plans, paired t-test.
    PayloadStudy {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        flights: Option<usize>,
    },
    /// Cross-validated cost predictors on a synthetic or supplied dataset.
    PredictCv {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        flights: Option<usize>,
        #[arg(long)]
        folds: Option<usize>,
        /// CSV with columns flight_id,C_A,C_D,C_S1..; built synthetically when omitted.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Enumerate aircraft-type assignments and rank their profit over the ensemble.
    Schedule {
        #[command(flatten)]
        common: Common,
        /// Missions and fleet JSON, replacing schedule.input from the config.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Serve the run store over HTTP.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
}

/// Parses `args`, runs the command and maps failures to exit codes.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let level = if cli.verbose { tracing_subscriber::filter::LevelFilter::INFO } else { tracing_subscriber::filter::LevelFilter::WARN };
    let _ = tracing_subscriber::fmt().with_max_level(level).with_writer(std::io::stderr).try_init();
    let store = Store::resolve(cli.store.clone());
    match commands::dispatch(&store, cli.command) {
        Ok(Some(path)) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
