use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CostMatrix, StochasticError};
use crate::router::Route;
use crate::stats::Summary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Lowest mean cost over scenarios.
    #[serde(alias = "expected")]
    ExpectedValue,
    /// Lowest worst-case trip fuel.
    Minimax,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::ExpectedValue => "expected_value",
            Criterion::Minimax => "minimax",
        })
    }
}

impl FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "expected" | "expected_value" => Ok(Criterion::ExpectedValue),
            "minimax" => Ok(Criterion::Minimax),
            other => Err(format!("unknown criterion {other:?} (expected_value | minimax)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateStats {
    pub index: usize,
    pub route_key: String,
    pub feasible_scenarios: usize,
    pub cost: Option<Summary>,
    pub fuel: Option<Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub selected_index: usize,
    pub selected_route: Route,
    pub criterion: Criterion,
    pub excluded_indices: Vec<usize>,
    /// The value minimized: mean cost or maximum fuel of the winner.
    pub score: f64,
    pub per_candidate_stats: Vec<CandidateStats>,
}

pub fn candidate_stats(matrix: &CostMatrix) -> Vec<CandidateStats> {
    (0..matrix.n_candidates())
        .map(|i| CandidateStats {
            index: i,
            route_key: matrix.candidate_routes[i].route_key.clone(),
            feasible_scenarios: matrix.infeasible_mask[i].iter().filter(|&&b| !b).count(),
            cost: Summary::of(&matrix.counted(i, &matrix.costs)),
            fuel: Summary::of(&matrix.counted(i, &matrix.fuel)),
        })
        .collect()
}

/// Picks the candidate minimizing the criterion's score among those not
/// excluded and with at least one usable cell. Ties go to the smallest route
/// key.
pub fn select(matrix: &CostMatrix, criterion: Criterion, exclusions: &[usize]) -> Result<SelectionResult, StochasticError> {
    if let Some(&bad) = exclusions.iter().find(|&&i| i >= matrix.n_candidates()) {
        return Err(StochasticError::UnknownCandidate(bad));
    }
    let scores = match criterion {
        Criterion::ExpectedValue => &matrix.column_means,
        Criterion::Minimax => &matrix.column_max,
    };
    let mut best: Option<(usize, f64)> = None;
    for (i, score) in scores.iter().enumerate() {
        let Some(score) = *score else { continue };
        if exclusions.contains(&i) {
            continue;
        }
        let better = match best {
            None => true,
            Some((b, bs)) => {
                score < bs || (score == bs && matrix.candidate_routes[i].route_key < matrix.candidate_routes[b].route_key)
            }
        };
        if better {
            best = Some((i, score));
        }
    }
    let (selected_index, score) = best.ok_or(StochasticError::NothingToSelect)?;
    let mut excluded_indices = exclusions.to_vec();
    excluded_indices.sort_unstable();
    excluded_indices.dedup();
    Ok(SelectionResult {
        selected_index,
        selected_route: matrix.candidate_routes[selected_index].clone(),
        criterion,
        excluded_indices,
        score,
        per_candidate_stats: candidate_stats(matrix),
    })
}

pub fn select_expected(matrix: &CostMatrix, exclusions: &[usize]) -> Result<SelectionResult, StochasticError> {
    select(matrix, Criterion::ExpectedValue, exclusions)
}

pub fn select_minimax(matrix: &CostMatrix, exclusions: &[usize]) -> Result<SelectionResult, StochasticError> {
    select(matrix, Criterion::Minimax, exclusions)
}
