use std::process::ExitCode;

use stochplan_core::harness::HarnessError;
use stochplan_core::performance::PerformanceError;
use stochplan_core::predict::PredictError;
use stochplan_core::router::RouterError;
use stochplan_core::schedule::ScheduleError;
use stochplan_core::stochastic::StochasticError;
use stochplan_core::weather::WeatherError;
use thiserror::Error;

/// Everything a subcommand can fail with, sorted by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad config file, flag or input document. Exit 2.
    #[error("config error: {0}")]
    Config(String),
    /// The inputs are valid but no flight or schedule satisfies them. Exit 3.
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// I/O and anything else. Exit 1.
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(2),
            CliError::Infeasible(_) => ExitCode::from(3),
            CliError::Other(_) => ExitCode::from(1),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

impl From<WeatherError> for CliError {
    fn from(e: WeatherError) -> Self {
        match e {
            WeatherError::Io(io) => CliError::Other(io.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<PerformanceError> for CliError {
    fn from(e: PerformanceError) -> Self {
        match e {
            PerformanceError::Io(io) => CliError::Other(io.to_string()),
            PerformanceError::UnflyableLeg { .. } | PerformanceError::BadMass { .. } => CliError::Infeasible(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<RouterError> for CliError {
    fn from(e: RouterError) -> Self {
        match e {
            RouterError::Infeasible(m) => CliError::Infeasible(m),
            RouterError::Weather(w) => w.into(),
            RouterError::Performance(p) => p.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<StochasticError> for CliError {
    fn from(e: StochasticError) -> Self {
        match e {
            StochasticError::Router(r) => r.into(),
            StochasticError::AllInfeasible(_) | StochasticError::NoCandidates | StochasticError::NothingToSelect => {
                CliError::Infeasible(e.to_string())
            }
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::InvalidConfig(_) => CliError::Config(e.to_string()),
            HarnessError::Weather(w) => w.into(),
            HarnessError::Router(r) => r.into(),
            HarnessError::Stochastic(s) => s.into(),
            HarnessError::Performance(p) => p.into(),
        }
    }
}

impl From<ScheduleError> for CliError {
    fn from(e: ScheduleError) -> Self {
        match e {
            ScheduleError::NoFeasibleSchedule(_) => CliError::Infeasible(e.to_string()),
            ScheduleError::Mission { mission, source } => match CliError::from(source) {
                CliError::Config(m) => CliError::Config(format!("mission {mission}: {m}")),
                CliError::Infeasible(m) => CliError::Infeasible(format!("mission {mission}: {m}")),
                CliError::Other(m) => CliError::Other(format!("mission {mission}: {m}")),
            },
            ScheduleError::Router(r) => r.into(),
            ScheduleError::Weather(w) => w.into(),
            ScheduleError::Performance(p) => p.into(),
            ScheduleError::InvalidInput(_) => CliError::Config(e.to_string()),
        }
    }
}

impl From<PredictError> for CliError {
    fn from(e: PredictError) -> Self {
        CliError::Config(e.to_string())
    }
}
