//! Deterministic flight-plan optimizer over a waypoint/level lattice.
//!
//! [`Planner::optimize`] searches jointly over horizontal path and level
//! profile; [`Planner::recost_route`] fixes the horizontal path and
//! re-optimizes only the vertical profile, which is what the second pass of
//! the stochastic pipeline needs.
//!
//! Dominance (label A beats B at the same waypoint and level when it is no
//! slower and burns no more fuel) is exact in this performance model with
//! respect to mass: a lighter-so-far label always stays lighter. With weather
//! that varies in time it additionally relies on arrival order being
//! preserved, which holds whenever the cost index outweighs the fuel a later
//! arrival could save from changing winds. That is comfortably true for
//! realistic cost indices and synoptic-scale wind evolution.

mod lattice;
mod search;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lattice::{build_lattice, Airport, Edge, Lattice, LatticeSpec, Waypoint};
pub use search::SearchStats;

use crate::performance::{AircraftModel, CostIndex, PerformanceError};
use crate::weather::{WeatherError, WeatherGrid};

#[derive(Debug, Error)]
pub enum RouterError {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("route {0} is not a path in the lattice")]
    UnknownRoute(String),
    #[error(transparent)]
    Weather(#[from] WeatherError),
    #[error(transparent)]
    Performance(#[from] PerformanceError),
}

/// Horizontal path, origin to destination.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Route {
    pub waypoint_ids: Vec<String>,
    /// Canonical key: ids joined with `-`.
    pub route_key: String,
}

impl Route {
    pub fn new(waypoint_ids: Vec<String>) -> Self {
        let route_key = waypoint_ids.join("-");
        Self { waypoint_ids, route_key }
    }
}

/// An optimized or re-costed plan. `cost` is the cost-index flight cost in
/// kg-equivalent under the scenario named by `scenario_tag`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightPlan {
    pub route: Route,
    /// Aircraft level index flown on each leg.
    pub level_profile: Vec<usize>,
    /// kg
    pub trip_fuel: f64,
    /// minutes
    pub trip_time: f64,
    pub takeoff_mass: f64,
    pub reserve: f64,
    pub payload: f64,
    pub cost: f64,
    pub scenario_tag: String,
}

/// Optimizer bound to one lattice, aircraft, cost index and departure time.
#[derive(Debug, Clone, Copy)]
pub struct Planner<'a> {
    lattice: &'a Lattice,
    model: &'a AircraftModel,
    ci: CostIndex,
    departure_h: f64,
    pruning: bool,
}

impl<'a> Planner<'a> {
    /// `departure_h` is hours after the weather issuance time.
    pub fn new(lattice: &'a Lattice, model: &'a AircraftModel, ci: CostIndex, departure_h: f64) -> Self {
        Self { lattice, model, ci, departure_h, pruning: true }
    }

    /// Disabling pruning keeps every label; results are unchanged, only slower.
    pub fn with_pruning(mut self, pruning: bool) -> Self {
        self.pruning = pruning;
        self
    }

    pub fn lattice(&self) -> &'a Lattice {
        self.lattice
    }

    pub fn model(&self) -> &'a AircraftModel {
        self.model
    }

    pub fn ci(&self) -> CostIndex {
        self.ci
    }

    pub fn departure_h(&self) -> f64 {
        self.departure_h
    }

    fn search<'s>(&'s self, weather: &'s WeatherGrid, payload: f64, allowed: Option<&'s [bool]>) -> search::Search<'s> {
        search::Search {
            lattice: self.lattice,
            model: self.model,
            ci: self.ci,
            departure_h: self.departure_h,
            weather,
            payload,
            pruning: self.pruning,
            allowed_edges: allowed,
        }
    }

    /// Minimum-cost plan over every path and level profile in the lattice.
    /// Ties go to the smallest route key, then the lowest level profile.
    pub fn optimize(&self, weather: &WeatherGrid, payload: f64, tag: &str) -> Result<FlightPlan, RouterError> {
        self.optimize_with_stats(weather, payload, tag).map(|(p, _)| p)
    }

    pub fn optimize_with_stats(&self, weather: &WeatherGrid, payload: f64, tag: &str) -> Result<(FlightPlan, SearchStats), RouterError> {
        let (mut plan, stats) = self.search(weather, payload, None).run()?;
        plan.scenario_tag = tag.to_string();
        Ok((plan, stats))
    }

    /// Best plan whose horizontal path is `route`; the level profile stays free.
    pub fn recost_route(&self, route: &Route, weather: &WeatherGrid, payload: f64, tag: &str) -> Result<FlightPlan, RouterError> {
        let edges = self.lattice.route_edges(route)?;
        let mut mask = vec![false; self.lattice.edges().len()];
        for e in edges {
            mask[e] = true;
        }
        let (mut plan, _) = self.search(weather, payload, Some(&mask)).run()?;
        plan.scenario_tag = tag.to_string();
        Ok(plan)
    }
}
