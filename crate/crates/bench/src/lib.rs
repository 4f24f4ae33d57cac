//! Shared fixture for the benchmarks: the first flight of the default
//! experiment, with its lattice, ensemble and aircraft.

use stochplan_core::harness::{ExperimentConfig, FlightContext};
use stochplan_core::{AircraftModel, CostIndex, Planner};

pub struct Fixture {
    pub config: ExperimentConfig,
    pub model: AircraftModel,
    pub ctx: FlightContext,
}

impl Fixture {
    pub fn new() -> Self {
        let config = ExperimentConfig::default();
        let model = config.model().expect("bundled aircraft");
        let ctx = FlightContext::build(&config, &model, 0).expect("default flight builds");
        Self { config, model, ctx }
    }

    pub fn ci(&self) -> CostIndex {
        self.config.cost_index()
    }

    pub fn planner(&self) -> Planner<'_> {
        self.ctx.planner(&self.model, self.ci())
    }
}

impl Default for Fixture {
    fn default() -> Self {
        Self::new()
    }
}
