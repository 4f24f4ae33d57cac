use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::thousands;
use super::{ExperimentConfig, FlightContext, FlightFailure, HarnessError};
use crate::router::Route;
use crate::stats::{paired_t_test, StatsError, TTest};
use crate::stochastic::{run_stochastic_plan, PayloadDistribution, StochasticConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedRow {
    pub flight_id: String,
    pub true_payload: f64,
    pub fixed_route: Route,
    pub uncertain_route: Route,
    pub fixed_fuel: f64,
    pub uncertain_fuel: f64,
    /// fixed − uncertain; positive when planning for uncertainty saved fuel
    pub difference: f64,
}

impl PairedRow {
    pub fn new(flight_id: String, true_payload: f64, fixed_route: Route, uncertain_route: Route, fixed_fuel: f64, uncertain_fuel: f64) -> Self {
        Self { flight_id, true_payload, fixed_route, uncertain_route, fixed_fuel, uncertain_fuel, difference: fixed_fuel - uncertain_fuel }
    }

    pub fn routes_differ(&self) -> bool {
        self.fixed_route != self.uncertain_route
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedStudyReport {
    pub rows: Vec<PairedRow>,
    pub failures: Vec<FlightFailure>,
    pub n_differing_routes: usize,
    pub mean_difference: f64,
    pub mean_difference_differing: Option<f64>,
    /// Σ difference / Σ fixed fuel over rows whose routes differ, percent.
    pub weighted_mean_percentage: Option<f64>,
    pub t_test: Option<TTest>,
    /// Why `t_test` is missing, if it is.
    pub t_test_note: Option<String>,
    pub n_positive: usize,
    pub n_negative: usize,
}

impl PairedStudyReport {
    pub fn from_rows(rows: Vec<PairedRow>, failures: Vec<FlightFailure>) -> Self {
        let diffs: Vec<f64> = rows.iter().map(|r| r.difference).collect();
        let differing: Vec<&PairedRow> = rows.iter().filter(|r| r.routes_differ()).collect();
        let (t_test, t_test_note) = match paired_t_test(&diffs) {
            Ok(t) => (Some(t), None),
            Err(StatsError::NoVariance) => (None, Some("NoVariance".to_string())),
            Err(e) => (None, Some(e.to_string())),
        };
        let mean_difference_differing = if differing.is_empty() {
            None
        } else {
            Some(differing.iter().map(|r| r.difference).sum::<f64>() / differing.len() as f64)
        };
        let weighted_mean_percentage = if differing.is_empty() {
            None
        } else {
            let fixed: f64 = differing.iter().map(|r| r.fixed_fuel).sum();
            Some(100.0 * differing.iter().map(|r| r.difference).sum::<f64>() / fixed)
        };
        Self {
            n_differing_routes: differing.len(),
            mean_difference: if diffs.is_empty() { 0.0 } else { diffs.iter().sum::<f64>() / diffs.len() as f64 },
            mean_difference_differing,
            weighted_mean_percentage,
            t_test,
            t_test_note,
            n_positive: diffs.iter().filter(|&&d| d > 0.0).count(),
            n_negative: diffs.iter().filter(|&&d| d < 0.0).count(),
            rows,
            failures,
        }
    }

    /// Per-flight table for flights whose routes differ, followed by the
    /// summary lines; tab separated.
    pub fn table(&self) -> String {
        let mut s = String::from(
            "Flight O_D\tFuel consumption (kg) with fixed payload\tFuel consumption (kg) with uncertain payload\tDifference (kg)\n",
        );
        for r in self.rows.iter().filter(|r| r.routes_differ()) {
            let _ = writeln!(s, "{}\t{}\t{}\t{:.2}", r.flight_id, thousands(r.fixed_fuel), thousands(r.uncertain_fuel), r.difference);
        }
        let nd = self.n_differing_routes;
        let n = self.rows.len();
        match self.mean_difference_differing {
            Some(m) => {
                let _ = writeln!(s, "Mean /{nd}\t\t\t{m:.2} kg");
            }
            None => {
                let _ = writeln!(s, "Mean /0\t\t\t-");
            }
        }
        if let Some(p) = self.weighted_mean_percentage {
            let _ = writeln!(s, "Weighted mean percentage / {nd}\t\t\t{p:.3}%");
        }
        let _ = writeln!(s, "Mean /{n}\t\t\t{:.2} kg", self.mean_difference);
        match (&self.t_test, &self.t_test_note) {
            (Some(t), _) => {
                let _ = writeln!(s, "T-test S statistic:\t{:.1}\tT-test p-value:\t{:.3}", t.t, t.p_two_sided);
            }
            (None, note) => {
                let _ = writeln!(s, "T-test S statistic:\t-\tT-test p-value:\t- ({})", note.as_deref().unwrap_or("undefined"));
            }
        }
        let _ = writeln!(s, "Positive values\t{}\tNegative values:\t{}", self.n_positive, self.n_negative);
        s
    }
}

fn study_flight(config: &ExperimentConfig, index: usize) -> Result<PairedRow, HarnessError> {
    let model = config.model()?;
    let ctx = FlightContext::build(config, &model, index)?;
    let planner = ctx.planner(&model, config.cost_index());
    let fixed_cfg = StochasticConfig { payload_k: 1, ..config.stochastic.clone() };
    let uncertain_cfg = StochasticConfig { payload_k: config.payload_k, ..config.stochastic.clone() };
    let fixed = run_stochastic_plan(&planner, &ctx.ensemble, &PayloadDistribution::fixed(config.payload.mean)?, &fixed_cfg)?;
    let uncertain = run_stochastic_plan(&planner, &ctx.ensemble, &config.payload, &uncertain_cfg)?;
    let truth = ctx.setup.true_payload;
    let fixed_fuel = ctx.nowcast.evaluate(&planner, &fixed.selection.selected_route, truth)?.trip_fuel;
    let uncertain_fuel = ctx.nowcast.evaluate(&planner, &uncertain.selection.selected_route, truth)?.trip_fuel;
    Ok(PairedRow::new(
        ctx.setup.flight_id,
        truth,
        fixed.selection.selected_route,
        uncertain.selection.selected_route,
        fixed_fuel,
        uncertain_fuel,
    ))
}

/// Runs the stochastic pipeline twice per flight, once with the payload
/// fixed at its mean and once with `payload_k` representative payloads, and
/// scores both selections under the nowcast at the payload actually carried.
pub fn run_payload_study(config: &ExperimentConfig) -> Result<PairedStudyReport, HarnessError> {
    config.validate()?;
    let model = config.model()?;
    let results: Vec<_> = (0..config.n_flights).into_par_iter().map(|i| study_flight(config, i)).collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => failures.push(FlightFailure { flight_id: super::flight_setup(config, &model, i).flight_id, reason: e.to_string() }),
        }
    }
    Ok(PairedStudyReport::from_rows(rows, failures))
}
