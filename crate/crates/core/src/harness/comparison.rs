use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{format_kg, savings_histogram, Histogram};
use super::{ExperimentConfig, FlightContext, FlightFailure, HarnessError};
use crate::router::Route;
use crate::stochastic::{run_stochastic_plan, Audit, PayloadDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    StochWins,
    DetWins,
    Tie,
}

impl Outcome {
    /// `fuel_saving` is stochastic minus deterministic truth fuel.
    pub fn classify(fuel_saving: f64, tolerance: f64) -> Self {
        if fuel_saving.abs() <= tolerance {
            Outcome::Tie
        } else if fuel_saving < 0.0 {
            Outcome::StochWins
        } else {
            Outcome::DetWins
        }
    }
}

/// One flight scored under the nowcast. Savings are stochastic minus
/// deterministic, so negative values favour the stochastic route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightComparison {
    pub flight_id: String,
    pub departure_h: f64,
    pub payload: f64,
    pub det_route: Route,
    pub stoch_route: Route,
    pub det_truth_fuel: f64,
    pub det_truth_time: f64,
    pub det_truth_cost: f64,
    pub stoch_truth_fuel: f64,
    pub stoch_truth_time: f64,
    pub stoch_truth_cost: f64,
    pub fuel_saving: f64,
    pub time_saving: f64,
    pub cost_saving: f64,
    pub outcome: Outcome,
    pub audit: Audit,
    pub truth_evaluations: usize,
}

/// Optimizer calls summed over flights, with and without deduplication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ComparisonAccounting {
    pub first_pass_runs: usize,
    pub second_pass_cells: usize,
    pub truth_evaluations: usize,
    pub total: usize,
    /// first pass + every first-pass route against every second-pass
    /// scenario + one truth run per first-pass route + the deterministic one
    pub nominal_total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub n_flights: usize,
    pub n_failed: usize,
    pub failures: Vec<FlightFailure>,
    pub stoch_wins: usize,
    pub ties: usize,
    pub det_wins: usize,
    pub stoch_win_fraction: f64,
    pub tie_fraction: f64,
    pub det_win_fraction: f64,
    pub win_or_tie_fraction: f64,
    pub mean_fuel_saving: f64,
    pub mean_time_saving: f64,
    pub mean_cost_saving: f64,
    pub tie_tolerance_kg: f64,
    pub histogram: Option<Histogram>,
    pub accounting: ComparisonAccounting,
    pub flights: Vec<FlightComparison>,
}

fn compare_flight(config: &ExperimentConfig, index: usize) -> Result<FlightComparison, HarnessError> {
    let model = config.model()?;
    let ctx = FlightContext::build(config, &model, index)?;
    let planner = ctx.planner(&model, config.cost_index());
    let payload = config.payload.mean;
    let mut stoch_cfg = config.stochastic.clone();
    stoch_cfg.payload_k = 1;
    let run = run_stochastic_plan(&planner, &ctx.ensemble, &PayloadDistribution::fixed(payload)?, &stoch_cfg)?;
    let det = run.first_pass.plans[0]
        .as_ref()
        .ok_or_else(|| HarnessError::Router(crate::router::RouterError::Infeasible(
            run.first_pass.failures.first().map(|f| f.reason.clone()).unwrap_or_default(),
        )))?;

    // every candidate under the truth, then the deterministic route once more
    let truths = run
        .first_pass
        .candidates
        .iter()
        .map(|c| ctx.nowcast.evaluate(&planner, &c.route, payload))
        .collect::<Result<Vec<_>, _>>()?;
    let det_truth = ctx.nowcast.evaluate(&planner, &det.route, payload)?;
    let stoch_truth = &truths[run.selection.selected_index];

    let fuel_saving = stoch_truth.trip_fuel - det_truth.trip_fuel;
    Ok(FlightComparison {
        flight_id: ctx.setup.flight_id.clone(),
        departure_h: ctx.setup.departure_h,
        payload,
        det_route: det.route.clone(),
        stoch_route: run.selection.selected_route.clone(),
        det_truth_fuel: det_truth.trip_fuel,
        det_truth_time: det_truth.trip_time,
        det_truth_cost: det_truth.cost,
        stoch_truth_fuel: stoch_truth.trip_fuel,
        stoch_truth_time: stoch_truth.trip_time,
        stoch_truth_cost: stoch_truth.cost,
        fuel_saving,
        time_saving: stoch_truth.trip_time - det_truth.trip_time,
        cost_saving: stoch_truth.cost - det_truth.cost,
        outcome: Outcome::classify(fuel_saving, config.tie_tolerance_kg),
        truth_evaluations: truths.len() + 1,
        audit: run.audit,
    })
}

/// Plans every flight deterministically (control member) and stochastically
/// (weather-only two-pass pipeline) and scores both routes under the nowcast.
pub fn run_comparison(config: &ExperimentConfig) -> Result<ComparisonReport, HarnessError> {
    config.validate()?;
    let results: Vec<Result<FlightComparison, HarnessError>> =
        (0..config.n_flights).into_par_iter().map(|i| compare_flight(config, i)).collect();
    let model = config.model()?;
    let mut flights = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(f) => flights.push(f),
            Err(e) => failures.push(FlightFailure { flight_id: super::flight_setup(config, &model, i).flight_id, reason: e.to_string() }),
        }
    }
    Ok(aggregate(config, flights, failures))
}

fn aggregate(config: &ExperimentConfig, flights: Vec<FlightComparison>, failures: Vec<FlightFailure>) -> ComparisonReport {
    let n = flights.len();
    let count = |o: Outcome| flights.iter().filter(|f| f.outcome == o).count();
    let (sw, ti, dw) = (count(Outcome::StochWins), count(Outcome::Tie), count(Outcome::DetWins));
    let frac = |c: usize| if n == 0 { 0.0 } else { c as f64 / n as f64 };
    let mean = |g: fn(&FlightComparison) -> f64| if n == 0 { 0.0 } else { flights.iter().map(g).sum::<f64>() / n as f64 };
    let mut accounting = ComparisonAccounting::default();
    for f in &flights {
        accounting.first_pass_runs += f.audit.first_pass_runs;
        accounting.second_pass_cells += f.audit.second_pass_cells;
        accounting.truth_evaluations += f.truth_evaluations;
        accounting.nominal_total += f.audit.optimizer_calls_without_dedup + f.audit.first_pass_runs + 1;
    }
    accounting.total = accounting.first_pass_runs + accounting.second_pass_cells + accounting.truth_evaluations;
    let savings: Vec<f64> = flights.iter().map(|f| f.fuel_saving).collect();
    ComparisonReport {
        n_flights: n,
        n_failed: failures.len(),
        failures,
        stoch_wins: sw,
        ties: ti,
        det_wins: dw,
        stoch_win_fraction: frac(sw),
        tie_fraction: frac(ti),
        det_win_fraction: frac(dw),
        win_or_tie_fraction: frac(sw + ti),
        mean_fuel_saving: mean(|f| f.fuel_saving),
        mean_time_saving: mean(|f| f.time_saving),
        mean_cost_saving: mean(|f| f.cost_saving),
        tie_tolerance_kg: config.tie_tolerance_kg,
        histogram: savings_histogram(&savings, config.histogram_bins),
        accounting,
        flights,
    }
}

impl ComparisonReport {
    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        let pct = |x: f64| format!("{:.1}%", 100.0 * x);
        let _ = writeln!(s, "flights evaluated      {}", self.n_flights);
        let _ = writeln!(s, "flights failed         {}", self.n_failed);
        let _ = writeln!(s, "stochastic better      {:>5}  {}", self.stoch_wins, pct(self.stoch_win_fraction));
        let _ = writeln!(s, "tie (|saving| <= {:.1})  {:>5}  {}", self.tie_tolerance_kg, self.ties, pct(self.tie_fraction));
        let _ = writeln!(s, "deterministic better   {:>5}  {}", self.det_wins, pct(self.det_win_fraction));
        let _ = writeln!(s, "better or tie                 {}", pct(self.win_or_tie_fraction));
        let _ = writeln!(s, "mean fuel saving       {}", format_kg(self.mean_fuel_saving));
        let _ = writeln!(s, "mean time saving       {:.3} min", self.mean_time_saving);
        let _ = writeln!(s, "mean cost saving       {}", format_kg(self.mean_cost_saving));
        let a = &self.accounting;
        let _ = writeln!(
            s,
            "optimizer runs         {} = {} first pass + {} second pass + {} truth (without dedup {})",
            a.total, a.first_pass_runs, a.second_pass_cells, a.truth_evaluations, a.nominal_total
        );
        s
    }

    pub fn flights_table(&self) -> String {
        let mut s = format!(
            "{:<18} {:>12} {:>12} {:>10} {:>10}  {}\n",
            "flight", "det fuel", "stoch fuel", "saving", "time", "outcome"
        );
        for f in &self.flights {
            let outcome = match f.outcome {
                Outcome::StochWins => "stochastic",
                Outcome::DetWins => "deterministic",
                Outcome::Tie => "tie",
            };
            let _ = writeln!(
                s,
                "{:<18} {:>12.1} {:>12.1} {:>10.1} {:>10.3}  {}",
                f.flight_id, f.det_truth_fuel, f.stoch_truth_fuel, f.fuel_saving, f.time_saving, outcome
            );
        }
        s
    }
}
