//! Local JSON service over the run store. Endpoint reference: `docs/api.md`.
//!
//! The service never re-runs an optimizer. Candidate statistics and
//! re-selection are computed from the cost matrix stored with an `splan` run.

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use stochplan_core::stats::Summary;
use stochplan_core::stochastic::{candidate_stats, select, Criterion, StochasticError};
use stochplan_core::{CostMatrix, SelectionResult};

use crate::commands::{CandidateRecord, CANDIDATES_FILE, MATRIX_FILE, SELECTION_FILE};
use crate::error::CliError;
use crate::store::{RunManifest, RunSummary, Store};

#[derive(Debug)]
pub enum ApiError {
    NotFound(String),
    Unprocessable(String),
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, message) = match self {
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, m),
            ApiError::Unprocessable(m) => (StatusCode::UNPROCESSABLE_ENTITY, m),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, m),
        };
        (status, Json(json!({ "error": message }))).into_response()
    }
}

impl From<CliError> for ApiError {
    fn from(e: CliError) -> Self {
        ApiError::Internal(e.to_string())
    }
}

impl From<serde_json::Error> for ApiError {
    fn from(e: serde_json::Error) -> Self {
        ApiError::Internal(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateView {
    pub index: usize,
    pub route_key: String,
    pub found_by: Vec<String>,
    pub polyline: Vec<[f64; 2]>,
    /// Trip fuel per scenario in kg, `null` where the route is infeasible.
    pub fuel: Vec<Option<f64>>,
    /// Quartiles, whiskers and outliers of the feasible fuel values.
    pub fuel_stats: Option<Summary>,
    pub mean_cost: Option<f64>,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatesResponse {
    pub run_id: String,
    pub scenario_tags: Vec<String>,
    pub criterion: Criterion,
    pub selected_index: usize,
    pub candidates: Vec<CandidateView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectRequest {
    pub criterion: Criterion,
    #[serde(default)]
    pub excluded: Vec<usize>,
}

pub fn router(store: Store) -> Router {
    Router::new()
        .route("/runs", get(list_runs))
        .route("/runs/{id}", get(manifest))
        .route("/runs/{id}/candidates", get(candidates))
        .route("/runs/{id}/select", post(reselect))
        .with_state(store)
}

/// Binds `addr` and serves until interrupted.
pub fn serve_blocking(store: Store, addr: &str) -> Result<(), CliError> {
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| CliError::Config(format!("bind {addr}: {e}")))?;
        eprintln!("serving {} on http://{}", store.root().display(), listener.local_addr()?);
        axum::serve(listener, router(store))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}

async fn list_runs(State(store): State<Store>) -> Result<Json<Vec<RunSummary>>, ApiError> {
    Ok(Json(store.list()?))
}

async fn manifest(State(store): State<Store>, Path(id): Path<String>) -> Result<Json<RunManifest>, ApiError> {
    store.manifest(&id)?.map(Json).ok_or_else(|| ApiError::NotFound(format!("no run {id:?}")))
}

fn read_json<T: serde::de::DeserializeOwned>(store: &Store, id: &str, file: &str) -> Result<T, ApiError> {
    let bytes = store.read(id, file)?.ok_or_else(|| ApiError::NotFound(format!("run {id:?} has no {file}; only splan runs carry candidates")))?;
    Ok(serde_json::from_slice(&bytes)?)
}

async fn candidates(State(store): State<Store>, Path(id): Path<String>) -> Result<Json<CandidatesResponse>, ApiError> {
    let matrix: CostMatrix = read_json(&store, &id, MATRIX_FILE)?;
    let records: Vec<CandidateRecord> = read_json(&store, &id, CANDIDATES_FILE)?;
    let selection: SelectionResult = read_json(&store, &id, SELECTION_FILE)?;
    if records.len() != matrix.n_candidates() {
        return Err(ApiError::Internal("candidates.json and matrix.json disagree".into()));
    }
    let stats = candidate_stats(&matrix);
    let candidates = records
        .into_iter()
        .zip(stats)
        .map(|(r, s)| {
            let fuel = matrix.fuel[r.index]
                .iter()
                .zip(&matrix.infeasible_mask[r.index])
                .map(|(&f, &bad)| (!bad).then_some(f))
                .collect();
            CandidateView {
                index: r.index,
                route_key: r.route_key,
                found_by: r.found_by,
                polyline: r.polyline,
                fuel,
                fuel_stats: s.fuel,
                mean_cost: s.cost.map(|c| c.mean),
                selected: r.index == selection.selected_index,
            }
        })
        .collect();
    Ok(Json(CandidatesResponse {
        run_id: id,
        scenario_tags: matrix.scenario_tags.clone(),
        criterion: selection.criterion,
        selected_index: selection.selected_index,
        candidates,
    }))
}

async fn reselect(State(store): State<Store>, Path(id): Path<String>, Json(req): Json<SelectRequest>) -> Result<Json<SelectionResult>, ApiError> {
    let matrix: CostMatrix = read_json(&store, &id, MATRIX_FILE)?;
    match select(&matrix, req.criterion, &req.excluded) {
        Ok(s) => Ok(Json(s)),
        Err(e @ (StochasticError::NothingToSelect | StochasticError::UnknownCandidate(_))) => Err(ApiError::Unprocessable(e.to_string())),
        Err(e) => Err(ApiError::Internal(e.to_string())),
    }
}
