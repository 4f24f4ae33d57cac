//! Gridded 4-D weather: storage and interpolation, synthetic ensembles with a
//! correlated nowcast, and the `WGRD1` file format.

mod grid;
pub mod io;
mod synthetic;

use chrono::{DateTime, Utc};
use thiserror::Error;

pub use grid::{sample_at, Axis, GridAxes, WeatherGrid, WindTemp, DEFAULT_LEVELS_HPA, MAX_WIND_MS};
pub use io::{load_grid, save_grid, EnsembleSource, WgrdDirectory};
pub use synthetic::{base_field, base_grid, generate_ensemble, isa_temperature, JetSpec, SyntheticWeatherSpec};

#[derive(Debug, Error)]
pub enum WeatherError {
    #[error("query outside grid on {axis} axis (value {value})")]
    OutOfDomain { axis: Axis, value: f64 },
    #[error("invalid axes: {0}")]
    InvalidAxes(String),
    #[error("{field} has {actual} values, axes require {expected}")]
    ShapeMismatch { field: &'static str, expected: usize, actual: usize },
    #[error("invalid grid value: {0}")]
    InvalidValue(String),
    #[error("invalid synthetic weather spec: {0}")]
    InvalidSpec(String),
    #[error("ensemble grids do not share axes")]
    AxesMismatch,
    #[error("grid file format error at byte {offset}: {reason}")]
    Format { offset: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Control forecast plus perturbed members. The control is not counted in
/// `n_members`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleForecast {
    control: WeatherGrid,
    members: Vec<WeatherGrid>,
    issuance_time: DateTime<Utc>,
}

impl EnsembleForecast {
    pub fn new(control: WeatherGrid, members: Vec<WeatherGrid>, issuance_time: DateTime<Utc>) -> Result<Self, WeatherError> {
        if members.iter().any(|m| m.axes() != control.axes()) {
            return Err(WeatherError::AxesMismatch);
        }
        Ok(Self { control, members, issuance_time })
    }

    pub fn control(&self) -> &WeatherGrid {
        &self.control
    }

    pub fn members(&self) -> &[WeatherGrid] {
        &self.members
    }

    pub fn n_members(&self) -> usize {
        self.members.len()
    }

    pub fn issuance_time(&self) -> DateTime<Utc> {
        self.issuance_time
    }

    pub fn axes(&self) -> &GridAxes {
        self.control.axes()
    }

    /// Control first, then members in order.
    pub fn all_grids(&self) -> impl Iterator<Item = &WeatherGrid> {
        std::iter::once(&self.control).chain(&self.members)
    }
}
