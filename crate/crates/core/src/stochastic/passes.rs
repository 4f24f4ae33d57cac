use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::StochasticError;
use crate::router::{FlightPlan, Planner, Route, RouterError};
use crate::weather::WeatherGrid;

/// A weather grid with the name it is reported under.
#[derive(Debug, Clone, Copy)]
pub struct NamedGrid<'a> {
    pub name: &'a str,
    pub grid: &'a WeatherGrid,
}

/// One (weather, payload) combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub weather_index: usize,
    pub payload_index: usize,
    pub weather: String,
    pub payload: f64,
    pub tag: String,
    pub weight: f64,
}

/// The full cross product of weather grids and payload values, weather-major,
/// each scenario equally weighted.
#[derive(Debug, Clone)]
pub struct ScenarioSet<'a> {
    weather: Vec<NamedGrid<'a>>,
    payloads: Vec<f64>,
    scenarios: Vec<Scenario>,
}

impl<'a> ScenarioSet<'a> {
    pub fn full_factorial(weather: Vec<NamedGrid<'a>>, payloads: Vec<f64>) -> Result<Self, StochasticError> {
        if weather.is_empty() || payloads.is_empty() {
            return Err(StochasticError::EmptyScenarioSet);
        }
        let n = weather.len() * payloads.len();
        let mut scenarios = Vec::with_capacity(n);
        for (wi, w) in weather.iter().enumerate() {
            for (pi, &p) in payloads.iter().enumerate() {
                let tag = if payloads.len() == 1 { w.name.to_string() } else { format!("{}/p{pi}", w.name) };
                scenarios.push(Scenario {
                    weather_index: wi,
                    payload_index: pi,
                    weather: w.name.to_string(),
                    payload: p,
                    tag,
                    weight: 1.0 / n as f64,
                });
            }
        }
        Ok(Self { weather, payloads, scenarios })
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn payloads(&self) -> &[f64] {
        &self.payloads
    }

    pub fn grid(&self, scenario: &Scenario) -> &'a WeatherGrid {
        self.weather[scenario.weather_index].grid
    }
}

/// A unique horizontal route from the first pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub route: Route,
    /// Tags of every scenario whose optimum used this route, in scenario order.
    pub found_by: Vec<String>,
    /// The optimum under the first scenario that found the route.
    pub first_plan: FlightPlan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFailure {
    pub tag: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstPass {
    pub runs: usize,
    pub candidates: Vec<Candidate>,
    pub failures: Vec<ScenarioFailure>,
    /// Optimal plan per scenario, `None` where infeasible.
    pub plans: Vec<Option<FlightPlan>>,
}

/// Optimizes once per scenario and deduplicates the resulting routes by
/// route key, keeping first-seen order.
pub fn first_pass(planner: &Planner<'_>, scenarios: &ScenarioSet<'_>) -> Result<FirstPass, StochasticError> {
    let results: Vec<Result<FlightPlan, RouterError>> = scenarios
        .scenarios()
        .par_iter()
        .map(|s| planner.optimize(scenarios.grid(s), s.payload, &s.tag))
        .collect();
    let mut candidates: Vec<Candidate> = Vec::new();
    let mut failures = Vec::new();
    let mut plans = Vec::with_capacity(results.len());
    for (s, result) in scenarios.scenarios().iter().zip(results) {
        match result {
            Ok(plan) => {
                match candidates.iter_mut().find(|c| c.route.route_key == plan.route.route_key) {
                    Some(c) => c.found_by.push(s.tag.clone()),
                    None => candidates.push(Candidate { route: plan.route.clone(), found_by: vec![s.tag.clone()], first_plan: plan.clone() }),
                }
                plans.push(Some(plan));
            }
            Err(RouterError::Infeasible(reason)) => {
                tracing::warn!(scenario = %s.tag, %reason, "first-pass scenario infeasible, dropped");
                failures.push(ScenarioFailure { tag: s.tag.clone(), reason });
                plans.push(None);
            }
            Err(e) => return Err(e.into()),
        }
    }
    if candidates.is_empty() {
        let reason = failures.first().map(|f| f.reason.clone()).unwrap_or_default();
        return Err(StochasticError::AllInfeasible(reason));
    }
    Ok(FirstPass { runs: scenarios.len(), candidates, failures, plans })
}

/// How infeasible second-pass cells enter the statistics.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum InfeasiblePolicy {
    /// Left out of means and maxima.
    #[default]
    Exclude,
    /// Counted with this cost and fuel (kg), e.g. the cost of a diversion.
    Penalty { kg: f64 },
}

/// Cost of every candidate under every scenario. Rows are candidates, columns
/// scenarios. `column_means` and `column_max` hold one value per candidate
/// (the mean cost and the worst-case fuel of its row); `None` when no cell of
/// the row counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    pub candidate_routes: Vec<Route>,
    pub scenario_tags: Vec<String>,
    pub weights: Vec<f64>,
    pub costs: Vec<Vec<f64>>,
    pub fuel: Vec<Vec<f64>>,
    pub time: Vec<Vec<f64>>,
    pub infeasible_mask: Vec<Vec<bool>>,
    pub policy: InfeasiblePolicy,
    pub column_means: Vec<Option<f64>>,
    pub column_max: Vec<Option<f64>>,
}

impl CostMatrix {
    /// Builds a matrix from raw arrays and fills the per-candidate statistics.
    pub fn from_parts(
        candidate_routes: Vec<Route>,
        scenario_tags: Vec<String>,
        costs: Vec<Vec<f64>>,
        fuel: Vec<Vec<f64>>,
        time: Vec<Vec<f64>>,
        infeasible_mask: Vec<Vec<bool>>,
        policy: InfeasiblePolicy,
    ) -> Result<Self, StochasticError> {
        let (n, m) = (candidate_routes.len(), scenario_tags.len());
        if n == 0 || m == 0 {
            return Err(StochasticError::EmptyScenarioSet);
        }
        for (name, rows) in [("costs", &costs), ("fuel", &fuel), ("time", &time)] {
            if rows.len() != n || rows.iter().any(|r| r.len() != m) {
                return Err(StochasticError::Dimension(format!("{name} must be {n} x {m}")));
            }
        }
        if infeasible_mask.len() != n || infeasible_mask.iter().any(|r| r.len() != m) {
            return Err(StochasticError::Dimension(format!("infeasible_mask must be {n} x {m}")));
        }
        let mut matrix = Self {
            candidate_routes,
            weights: vec![1.0 / m as f64; m],
            scenario_tags,
            costs,
            fuel,
            time,
            infeasible_mask,
            policy,
            column_means: Vec::new(),
            column_max: Vec::new(),
        };
        matrix.column_means = (0..n).map(|i| crate::stats::mean(&matrix.counted(i, &matrix.costs))).collect();
        matrix.column_max = (0..n)
            .map(|i| matrix.counted(i, &matrix.fuel).into_iter().reduce(f64::max))
            .collect();
        Ok(matrix)
    }

    /// Convenience constructor for an all-feasible matrix whose fuel equals
    /// its cost.
    pub fn from_costs(costs: Vec<Vec<f64>>) -> Result<Self, StochasticError> {
        let n = costs.len();
        let m = costs.first().map_or(0, Vec::len);
        let routes = (0..n).map(|i| Route::new(vec![format!("R{i:03}")])).collect();
        let tags = (0..m).map(|j| format!("s{j}")).collect();
        Self::from_parts(routes, tags, costs.clone(), costs.clone(), costs, vec![vec![false; m]; n], InfeasiblePolicy::Exclude)
    }

    pub fn n_candidates(&self) -> usize {
        self.candidate_routes.len()
    }

    pub fn n_scenarios(&self) -> usize {
        self.scenario_tags.len()
    }

    /// Values of row `i` of `array` that count towards its statistics.
    pub fn counted(&self, i: usize, array: &[Vec<f64>]) -> Vec<f64> {
        array[i]
            .iter()
            .zip(&self.infeasible_mask[i])
            .filter_map(|(&v, &bad)| match (bad, self.policy) {
                (false, _) => Some(v),
                (true, InfeasiblePolicy::Exclude) => None,
                (true, InfeasiblePolicy::Penalty { kg }) => Some(kg),
            })
            .collect()
    }

    /// Candidates with no usable cell.
    pub fn unusable(&self) -> Vec<usize> {
        (0..self.n_candidates()).filter(|&i| self.column_means[i].is_none()).collect()
    }

    pub fn infeasible_cells(&self) -> usize {
        self.infeasible_mask.iter().flatten().filter(|&&b| b).count()
    }
}

/// Re-costs every candidate under every scenario. Cells are evaluated in
/// parallel; each is a pure function of its inputs, so the matrix does not
/// depend on scheduling.
pub fn second_pass(
    planner: &Planner<'_>,
    candidates: &[Route],
    scenarios: &ScenarioSet<'_>,
    policy: InfeasiblePolicy,
) -> Result<CostMatrix, StochasticError> {
    if candidates.is_empty() {
        return Err(StochasticError::NoCandidates);
    }
    let m = scenarios.len();
    let cells: Vec<Result<Option<FlightPlan>, StochasticError>> = (0..candidates.len() * m)
        .into_par_iter()
        .map(|cell| {
            let (route, s) = (&candidates[cell / m], &scenarios.scenarios()[cell % m]);
            match planner.recost_route(route, scenarios.grid(s), s.payload, &s.tag) {
                Ok(plan) => Ok(Some(plan)),
                Err(RouterError::Infeasible(_)) => Ok(None),
                Err(e) => Err(e.into()),
            }
        })
        .collect();
    let n = candidates.len();
    let fill = match policy {
        InfeasiblePolicy::Exclude => 0.0,
        InfeasiblePolicy::Penalty { kg } => kg,
    };
    let mut costs = vec![vec![fill; m]; n];
    let mut fuel = vec![vec![fill; m]; n];
    let mut time = vec![vec![0.0; m]; n];
    let mut mask = vec![vec![true; m]; n];
    for (cell, result) in cells.into_iter().enumerate() {
        let (i, j) = (cell / m, cell % m);
        if let Some(plan) = result? {
            costs[i][j] = plan.cost;
            fuel[i][j] = plan.trip_fuel;
            time[i][j] = plan.trip_time;
            mask[i][j] = false;
        }
    }
    CostMatrix::from_parts(
        candidates.to_vec(),
        scenarios.scenarios().iter().map(|s| s.tag.clone()).collect(),
        costs,
        fuel,
        time,
        mask,
        policy,
    )
}
