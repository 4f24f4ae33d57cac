//! Two-pass stochastic planning.
//!
//! The first pass optimizes once per (weather grid, payload value) scenario
//! and keeps the distinct horizontal routes. The second pass re-costs every
//! distinct route under every scenario of the (usually perturbed-only)
//! ensemble, giving a cost matrix from which a route is selected by mean cost
//! or by worst-case fuel. Selection only reads the matrix, so criteria and
//! exclusions can be changed without re-running the optimizer.

mod passes;
mod payload;
mod select;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use passes::{
    first_pass, second_pass, Candidate, CostMatrix, FirstPass, InfeasiblePolicy, NamedGrid, Scenario, ScenarioFailure,
    ScenarioSet,
};
pub use payload::{payload_representatives, payload_sigma, PayloadDistribution, PayloadMode, DEFAULT_SIGMA_FRACTION};
pub use select::{candidate_stats, select, select_expected, select_minimax, CandidateStats, Criterion, SelectionResult};

use crate::router::{Planner, RouterError};
use crate::weather::EnsembleForecast;

#[derive(Debug, Error)]
pub enum StochasticError {
    #[error("invalid payload distribution: {0}")]
    InvalidPayload(String),
    #[error("scenario set is empty")]
    EmptyScenarioSet,
    #[error("no candidate routes")]
    NoCandidates,
    #[error("every scenario is infeasible: {0}")]
    AllInfeasible(String),
    #[error("no selectable candidate (all excluded or infeasible)")]
    NothingToSelect,
    #[error("candidate index {0} out of range")]
    UnknownCandidate(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Router(#[from] RouterError),
}

/// Which weather grids the second pass scores against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SecondPassGrids {
    /// Perturbed members only.
    #[default]
    Members,
    /// Control plus members.
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StochasticConfig {
    /// Number of representative payload values; 1 means weather-only.
    pub payload_k: usize,
    pub second_pass_grids: SecondPassGrids,
    pub criterion: Criterion,
    pub infeasible: InfeasiblePolicy,
}

impl Default for StochasticConfig {
    fn default() -> Self {
        Self { payload_k: 1, second_pass_grids: SecondPassGrids::Members, criterion: Criterion::ExpectedValue, infeasible: InfeasiblePolicy::Exclude }
    }
}

/// Optimizer-call bookkeeping for one stochastic plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Audit {
    pub first_pass_weather_grids: usize,
    pub payload_values: usize,
    pub first_pass_runs: usize,
    pub first_pass_infeasible: usize,
    pub unique_candidates: usize,
    /// Feasible first-pass runs whose route was already known.
    pub duplicate_routes: usize,
    pub second_pass_scenarios: usize,
    pub second_pass_cells: usize,
    pub second_pass_infeasible_cells: usize,
    /// What the second pass would cost without deduplication.
    pub second_pass_cells_without_dedup: usize,
    pub optimizer_calls: usize,
    pub optimizer_calls_without_dedup: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticRun {
    pub payloads: Vec<f64>,
    pub first_pass: FirstPass,
    pub matrix: CostMatrix,
    pub selection: SelectionResult,
    pub audit: Audit,
}

/// Names of the ensemble grids: `control`, `member_01`, ...
pub fn grid_names(ensemble: &EnsembleForecast) -> Vec<String> {
    std::iter::once("control".to_string())
        .chain((1..=ensemble.n_members()).map(|m| format!("member_{m:02}")))
        .collect()
}

/// Payload representatives, then first pass over control and members, second
/// pass over the configured grids, then selection.
pub fn run_stochastic_plan(
    planner: &Planner<'_>,
    ensemble: &EnsembleForecast,
    payload: &PayloadDistribution,
    config: &StochasticConfig,
) -> Result<StochasticRun, StochasticError> {
    payload.validate()?;
    let payloads = payload.representatives(config.payload_k)?;
    let names = grid_names(ensemble);
    let named: Vec<NamedGrid<'_>> = names.iter().zip(ensemble.all_grids()).map(|(n, g)| NamedGrid { name: n, grid: g }).collect();
    let first_set = ScenarioSet::full_factorial(named.clone(), payloads.clone())?;
    let first = first_pass(planner, &first_set)?;

    let second_grids = match config.second_pass_grids {
        SecondPassGrids::Members => named[1..].to_vec(),
        SecondPassGrids::All => named,
    };
    let second_set = ScenarioSet::full_factorial(second_grids, payloads.clone())?;
    let routes: Vec<_> = first.candidates.iter().map(|c| c.route.clone()).collect();
    let matrix = second_pass(planner, &routes, &second_set, config.infeasible)?;
    let selection = select(&matrix, config.criterion, &[])?;

    let feasible_runs = first.runs - first.failures.len();
    let cells = matrix.n_candidates() * matrix.n_scenarios();
    let audit = Audit {
        first_pass_weather_grids: ensemble.n_members() + 1,
        payload_values: payloads.len(),
        first_pass_runs: first.runs,
        first_pass_infeasible: first.failures.len(),
        unique_candidates: first.candidates.len(),
        duplicate_routes: feasible_runs - first.candidates.len(),
        second_pass_scenarios: second_set.len(),
        second_pass_cells: cells,
        second_pass_infeasible_cells: matrix.infeasible_cells(),
        second_pass_cells_without_dedup: first.runs * second_set.len(),
        optimizer_calls: first.runs + cells,
        optimizer_calls_without_dedup: first.runs + first.runs * second_set.len(),
    };
    Ok(StochasticRun { payloads, first_pass: first, matrix, selection, audit })
}
