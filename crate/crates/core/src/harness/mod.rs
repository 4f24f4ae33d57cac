//! Desk-scale experiments: deterministic versus stochastic planning scored
//! against a nowcast, the fixed-versus-uncertain payload paired study and the
//! cost datasets used by the predictors.
//!
//! Each flight gets its own synthetic ensemble and nowcast, drawn from a
//! random stream keyed by the experiment seed and the flight index, so
//! results do not depend on how flights are scheduled across threads.

mod comparison;
mod dataset;
mod payload_study;
mod report;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use comparison::{run_comparison, ComparisonAccounting, ComparisonReport, FlightComparison, Outcome};
pub use dataset::build_cost_dataset;
pub use payload_study::{run_payload_study, PairedRow, PairedStudyReport};
pub use report::{format_kg, savings_histogram, thousands, Histogram};

use crate::performance::{AircraftModel, CostIndex, PerformanceError};
use crate::router::{build_lattice, Airport, FlightPlan, Lattice, LatticeSpec, Planner, Route, RouterError};
use crate::stochastic::{PayloadDistribution, StochasticConfig, StochasticError};
use crate::weather::{generate_ensemble, EnsembleForecast, GridAxes, SyntheticWeatherSpec, WeatherError, WeatherGrid};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Weather(#[from] WeatherError),
    #[error(transparent)]
    Router(#[from] RouterError),
    #[error(transparent)]
    Stochastic(#[from] StochasticError),
    #[error(transparent)]
    Performance(#[from] PerformanceError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityPair {
    pub origin: Airport,
    pub destination: Airport,
}

/// Six North Atlantic pairs flown in both directions.
pub fn default_city_pairs() -> Vec<CityPair> {
    let ap = |c: &str, lat: f64, lon: f64| Airport::new(c, lat, lon);
    let pairs = [
        (ap("YQX", 48.95, -54.57), ap("SNN", 52.70, -8.92)),
        (ap("TER", 38.76, -27.09), ap("LIS", 38.78, -9.14)),
        (ap("YYT", 47.62, -52.75), ap("TER", 38.76, -27.09)),
        (ap("BDA", 32.36, -64.68), ap("TER", 38.76, -27.09)),
        (ap("TER", 38.76, -27.09), ap("SNN", 52.70, -8.92)),
        (ap("KEF", 63.99, -22.61), ap("YQX", 48.95, -54.57)),
    ];
    pairs
        .iter()
        .flat_map(|(a, b)| {
            [CityPair { origin: a.clone(), destination: b.clone() }, CityPair { origin: b.clone(), destination: a.clone() }]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub city_pairs: Vec<CityPair>,
    pub n_flights: usize,
    pub seed: u64,
    /// Template for every flight's weather; the seed is replaced per flight.
    pub weather: SyntheticWeatherSpec,
    /// Per-flight uniform shift of the jet latitude, ± degrees.
    pub jet_lat_jitter_deg: f64,
    /// Departure hour after issuance is drawn uniformly from this window.
    pub departure_window_h: (f64, f64),
    /// Hours of weather kept beyond departure.
    pub weather_horizon_h: f64,
    /// Degrees of grid margin around the lattice.
    pub grid_margin_deg: f64,
    pub lattice: LatticeSpec,
    pub aircraft: String,
    /// kg per minute
    pub ci: f64,
    pub payload: PayloadDistribution,
    pub tie_tolerance_kg: f64,
    pub stochastic: StochasticConfig,
    /// Payload values used in the uncertain arm of the payload study.
    pub payload_k: usize,
    pub histogram_bins: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            city_pairs: default_city_pairs(),
            n_flights: 200,
            seed: 2020,
            weather: SyntheticWeatherSpec::default(),
            jet_lat_jitter_deg: 4.0,
            departure_window_h: (0.0, 12.0),
            weather_horizon_h: 12.0,
            grid_margin_deg: 2.0,
            lattice: LatticeSpec::default(),
            aircraft: "narrowbody".into(),
            ci: 20.0,
            payload: PayloadDistribution::fraction_of_mean(14_000.0, None).expect("valid default payload"),
            tie_tolerance_kg: 0.5,
            stochastic: StochasticConfig::default(),
            payload_k: 5,
            histogram_bins: 20,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::InvalidConfig(m));
        if self.city_pairs.is_empty() {
            return bad("city_pairs is empty".into());
        }
        if !(self.tie_tolerance_kg >= 0.0) {
            return bad(format!("tie_tolerance_kg {} must be >= 0", self.tie_tolerance_kg));
        }
        let (a, b) = self.departure_window_h;
        if !(a >= 0.0 && b >= a) {
            return bad(format!("departure_window_h ({a}, {b}) must satisfy 0 <= start <= end"));
        }
        if !(self.weather_horizon_h > 0.0 && self.grid_margin_deg >= 0.0 && self.jet_lat_jitter_deg >= 0.0) {
            return bad("weather_horizon_h must be > 0; grid_margin_deg and jet_lat_jitter_deg >= 0".into());
        }
        if self.payload_k == 0 || self.histogram_bins == 0 {
            return bad("payload_k and histogram_bins must be >= 1".into());
        }
        CostIndex::new(self.ci).ok_or_else(|| HarnessError::InvalidConfig(format!("ci {} must be >= 0", self.ci)))?;
        self.weather.validate()?;
        self.payload.validate()?;
        AircraftModel::bundled(&self.aircraft)?;
        Ok(())
    }

    pub fn model(&self) -> Result<AircraftModel, HarnessError> {
        Ok(AircraftModel::bundled(&self.aircraft)?)
    }

    pub fn cost_index(&self) -> CostIndex {
        CostIndex::new(self.ci).unwrap_or(CostIndex::new(0.0).expect("zero is a valid cost index"))
    }
}

/// Everything random about one flight, fixed before any planning happens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightSetup {
    pub index: usize,
    pub flight_id: String,
    pub pair: CityPair,
    pub departure_h: f64,
    pub weather: SyntheticWeatherSpec,
    /// Payload actually carried, for the payload study.
    pub true_payload: f64,
}

pub fn flight_setup(config: &ExperimentConfig, model: &AircraftModel, index: usize) -> FlightSetup {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index as u64 + 1);
    let pair = config.city_pairs[index % config.city_pairs.len()].clone();
    let (a, b) = config.departure_window_h;
    let departure_h = if b > a { rng.random_range(a..b) } else { a };
    let mut weather = config.weather.clone();
    weather.seed = rng.random();
    if config.jet_lat_jitter_deg > 0.0 {
        weather.base_jet.center_lat += rng.random_range(-config.jet_lat_jitter_deg..config.jet_lat_jitter_deg);
    }
    weather.base_jet.meander_phase_deg = rng.random_range(0.0..weather.base_jet.meander_wavelength_deg);
    let true_payload = config.payload.sample(&mut rng).clamp(0.0, model.max_payload);
    let flight_id = format!("F{index:04}_{}_{}", pair.origin.code, pair.destination.code);
    FlightSetup { index, flight_id, pair, departure_h, weather, true_payload }
}

/// Grid axes covering the lattice plus a margin, from issuance to the
/// departure hour plus the configured horizon.
pub fn flight_axes(lattice: &Lattice, departure_h: f64, config: &ExperimentConfig) -> GridAxes {
    covering_axes(lattice, config.grid_margin_deg, departure_h + config.weather_horizon_h)
}

/// One-degree axes around the lattice (margin at least one degree) with
/// six-hourly times from 0 to `until_h` rounded up.
pub fn covering_axes(lattice: &Lattice, margin_deg: f64, until_h: f64) -> GridAxes {
    let (mut lat0, mut lat1, mut lon0, mut lon1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for w in lattice.waypoints() {
        lat0 = lat0.min(w.lat);
        lat1 = lat1.max(w.lat);
        lon0 = lon0.min(w.lon);
        lon1 = lon1.max(w.lon);
    }
    let m = margin_deg.max(1.0);
    GridAxes::regular_box(
        ((lat0 - m).floor().max(-90.0), (lat1 + m).ceil().min(90.0)),
        ((lon0 - m).floor(), (lon1 + m).ceil()),
        (until_h / 6.0).ceil().max(1.0) * 6.0,
    )
}

/// Nowcast grid used as ground truth. Wrapping it keeps truth evaluations on
/// a single, clearly named path.
#[derive(Debug, Clone, PartialEq)]
pub struct Nowcast(WeatherGrid);

impl Nowcast {
    pub fn new(grid: WeatherGrid) -> Self {
        Self(grid)
    }

    pub fn grid(&self) -> &WeatherGrid {
        &self.0
    }

    /// What flying `route` would actually have cost.
    pub fn evaluate(&self, planner: &Planner<'_>, route: &Route, payload: f64) -> Result<FlightPlan, RouterError> {
        planner.recost_route(route, &self.0, payload, "nowcast")
    }

    /// Best plan in hindsight.
    pub fn optimize(&self, planner: &Planner<'_>, payload: f64) -> Result<FlightPlan, RouterError> {
        planner.optimize(&self.0, payload, "nowcast")
    }
}

/// Materialized inputs for one flight.
pub struct FlightContext {
    pub setup: FlightSetup,
    pub lattice: Lattice,
    pub ensemble: EnsembleForecast,
    pub nowcast: Nowcast,
}

impl FlightContext {
    pub fn build(config: &ExperimentConfig, model: &AircraftModel, index: usize) -> Result<Self, HarnessError> {
        let setup = flight_setup(config, model, index);
        let lattice = build_lattice(&setup.pair.origin, &setup.pair.destination, &config.lattice)?;
        let axes = flight_axes(&lattice, setup.departure_h, config);
        let (ensemble, nowcast) = generate_ensemble(&setup.weather, &axes)?;
        Ok(Self { setup, lattice, ensemble, nowcast: Nowcast::new(nowcast) })
    }

    pub fn planner<'a>(&'a self, model: &'a AircraftModel, ci: CostIndex) -> Planner<'a> {
        Planner::new(&self.lattice, model, ci, self.setup.departure_h)
    }
}

/// A flight that could not be evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightFailure {
    pub flight_id: String,
    pub reason: String,
}
