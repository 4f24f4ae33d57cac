use rayon::prelude::*;

use super::{ExperimentConfig, FlightContext, FlightFailure, HarnessError};
use crate::predict::CostSample;

fn sample(config: &ExperimentConfig, index: usize) -> Result<CostSample, HarnessError> {
    let model = config.model()?;
    let ctx = FlightContext::build(config, &model, index)?;
    let planner = ctx.planner(&model, config.cost_index());
    let payload = config.payload.mean;
    let c_actual = ctx.nowcast.optimize(&planner, payload)?.cost;
    let c_det = planner.optimize(ctx.ensemble.control(), payload, "control")?.cost;
    let c_members = ctx
        .ensemble
        .members()
        .iter()
        .map(|m| planner.optimize(m, payload, "member").map(|p| p.cost))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CostSample { flight_id: ctx.setup.flight_id, c_actual, c_det, c_members })
}

/// Optimal cost of every flight under the nowcast, the control and each
/// member, at the mean payload.
pub fn build_cost_dataset(config: &ExperimentConfig) -> Result<(Vec<CostSample>, Vec<FlightFailure>), HarnessError> {
    config.validate()?;
    let model = config.model()?;
    let results: Vec<_> = (0..config.n_flights).into_par_iter().map(|i| sample(config, i)).collect();
    let mut samples = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(s) => samples.push(s),
            Err(e) => failures.push(FlightFailure { flight_id: super::flight_setup(config, &model, i).flight_id, reason: e.to_string() }),
        }
    }
    Ok((samples, failures))
}
