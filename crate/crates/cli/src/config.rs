//! TOML configuration. Every section is optional; missing values take the
//! defaults shown by `stochplan <command> --help` and the README.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stochplan_core::harness::ExperimentConfig;
use stochplan_core::predict::RegressorSpec;
use stochplan_core::router::{Airport, LatticeSpec};
use stochplan_core::schedule::Economics;
use stochplan_core::stochastic::{PayloadDistribution, StochasticConfig};
use stochplan_core::{AircraftModel, CostIndex, SyntheticWeatherSpec};

use crate::error::CliError;
use crate::store::sha256_hex;

/// The single flight planned by `gen-weather`, `plan` and `splan`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlightConfig {
    pub origin: Airport,
    pub destination: Airport,
    /// Hours after the forecast issuance.
    pub departure_h: f64,
    pub aircraft: String,
    /// kg per minute
    pub ci: f64,
    pub payload: PayloadDistribution,
    pub grid_margin_deg: f64,
    /// Hours of weather generated beyond departure.
    pub weather_horizon_h: f64,
}

impl Default for FlightConfig {
    fn default() -> Self {
        Self {
            origin: Airport::new("YQX", 48.95, -54.57),
            destination: Airport::new("SNN", 52.70, -8.92),
            departure_h: 0.0,
            aircraft: "narrowbody".into(),
            ci: 20.0,
            payload: PayloadDistribution::fraction_of_mean(14_000.0, None).expect("valid default payload"),
            grid_margin_deg: 2.0,
            weather_horizon_h: 12.0,
        }
    }
}

impl FlightConfig {
    pub fn model(&self) -> Result<AircraftModel, CliError> {
        Ok(AircraftModel::bundled(&self.aircraft)?)
    }

    pub fn cost_index(&self) -> Result<CostIndex, CliError> {
        CostIndex::new(self.ci).ok_or_else(|| CliError::Config(format!("flight.ci {} must be >= 0", self.ci)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictConfig {
    pub folds: usize,
    /// Seed of the fold shuffle.
    pub seed: u64,
    pub regressors: Vec<RegressorSpec>,
}

impl Default for PredictConfig {
    fn default() -> Self {
        Self { folds: 10, seed: 0, regressors: RegressorSpec::default_set() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleConfig {
    /// Missions and fleet as JSON; relative paths are taken from the config
    /// file's directory.
    pub input: Option<PathBuf>,
    /// Most schedules enumerated.
    pub cap: usize,
    pub grid_margin_deg: f64,
    pub economics: Economics,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self { input: None, cap: 64, grid_margin_deg: 2.0, economics: Economics::default() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub flight: FlightConfig,
    pub weather: SyntheticWeatherSpec,
    pub lattice: LatticeSpec,
    pub stochastic: StochasticConfig,
    /// Multi-flight experiments: `compare`, `payload-study`, `predict-cv`.
    pub experiment: ExperimentConfig,
    pub predict: PredictConfig,
    pub schedule: ScheduleConfig,
}

impl Config {
    /// Defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut config: Config = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if let Some(input) = &config.schedule.input {
            if input.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                config.schedule.input = Some(base.join(input));
            }
        }
        Ok(config)
    }

    /// Hash of the command name, the fully resolved configuration and any
    /// extra inputs (e.g. digests of files the command reads).
    pub fn hash(&self, command: &str, extras: &[String]) -> Result<String, CliError> {
        let canonical = serde_json::to_vec(&(command, self, extras))?;
        Ok(sha256_hex(&canonical))
    }
}
