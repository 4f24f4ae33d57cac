//! Stochastic flight-plan optimization over ensemble weather forecasts and
//! uncertain payload.
//!
//! The crate is organised bottom-up:
//!
//! * [`weather`] gridded 4-D wind/temperature fields, a synthetic ensemble
//!   generator and the `WGRD1` grid container.
//! * [`performance`] an affine fuel-flow aircraft model, leg integration,
//!   cost-index cost and reserve fuel.
//! * [`router`] the deterministic optimizer: a waypoint/level lattice searched
//!   with dominance-pruned labels, plus fixed-route re-costing.
//! * [`stochastic`] scenario expansion, the two-pass candidate/cost-matrix
//!   pipeline and expected-value / minimax route selection.
//! * [`predict`] cost-prediction baselines, trainable regressors and k-fold
//!   cross-validation.
//! * [`harness`] deterministic-vs-stochastic and fixed-vs-uncertain payload
//!   experiments against a nowcast ground truth.
//! * [`schedule`] aircraft-type assignment and profit distributions for a
//!   fixed mission list.

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod geo;
pub mod harness;
pub mod performance;
pub mod predict;
pub mod router;
pub mod schedule;
pub mod stats;
pub mod stochastic;
pub mod weather;

pub use performance::{AircraftModel, CostIndex, LegResult, ReservePolicy};
pub use router::{FlightPlan, Lattice, LatticeSpec, Planner, Route};
pub use stochastic::{CostMatrix, PayloadDistribution, ScenarioSet, SelectionResult};
pub use weather::{EnsembleForecast, SyntheticWeatherSpec, WeatherGrid, WindTemp};
