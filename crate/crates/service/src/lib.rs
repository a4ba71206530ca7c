//! HTTP JSON API over the induction engines.
//!
//! Datasets are uploaded once as raw CSV and kept immutable in an
//! insert-only registry; every query ships its own gesture, so handlers
//! share nothing mutable besides that registry.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};
use std::time::Duration;

use axum::body::{to_bytes, Body, Bytes};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use log::{info, warn};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use predbridge_core::data::categorize_labels;
use predbridge_core::rpi::f1_score;
use predbridge_core::{
    confusion, evaluate_predicate, load_csv, normalize, run_query, Algorithm, Dataset, Error, Gesture, IngestConfig,
    NormalizedView, Predicate, PredicateWire, QueryConfig,
};

pub const DEFAULT_MAX_UPLOAD_BYTES: usize = 50 * 1024 * 1024;
pub const DEFAULT_QUERY_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Upper bound on any request body, CSV uploads included.
    pub max_upload_bytes: usize,
    /// Compute budget for one `/query`.
    pub query_timeout: Duration,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            max_upload_bytes: DEFAULT_MAX_UPLOAD_BYTES,
            query_timeout: DEFAULT_QUERY_TIMEOUT,
        }
    }
}

struct Entry {
    dataset: Dataset,
    view: NormalizedView,
}

pub struct AppState {
    cfg: ServiceConfig,
    datasets: RwLock<HashMap<u64, Arc<Entry>>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(cfg: ServiceConfig) -> Self {
        Self {
            cfg,
            datasets: RwLock::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        }
    }

    fn insert(&self, dataset: Dataset) -> u64 {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let view = normalize(&dataset);
        self.datasets
            .write()
            .expect("registry lock poisoned")
            .insert(id, Arc::new(Entry { dataset, view }));
        id
    }

    fn get(&self, id: &str) -> Result<Arc<Entry>, ApiError> {
        id.parse::<u64>()
            .ok()
            .and_then(|k| self.datasets.read().expect("registry lock poisoned").get(&k).cloned())
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("unknown dataset {id:?}")))
    }
}

pub fn router(cfg: ServiceConfig) -> Router {
    Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/datasets", post(upload))
        .route("/datasets/{id}/query", post(query))
        .route("/datasets/{id}/evaluate", post(evaluate))
        .route("/datasets/{id}/splom", get(splom))
        .with_state(Arc::new(AppState::new(cfg)))
}

/// Error body: `{"error": {"code", "message", "detail"}}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    detail: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            detail: Value::Null,
        }
    }

    fn unprocessable(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_request", message)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        let (status, code) = match &e {
            Error::InvalidPredicate(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_predicate"),
            Error::InvalidInput(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_input"),
            Error::EmptySelection(_) => (StatusCode::UNPROCESSABLE_ENTITY, "empty_selection"),
            Error::Divergence { .. } => (StatusCode::INTERNAL_SERVER_ERROR, "divergence"),
            Error::Io(_) => (StatusCode::INTERNAL_SERVER_ERROR, "io"),
            Error::Format(_)
            | Error::EmptyDataset
            | Error::NoNumericDimensions
            | Error::MissingProjection
            | Error::DegenerateProjection(_)
            | Error::Csv(_) => (StatusCode::BAD_REQUEST, "format"),
        };
        let detail = match e {
            Error::Divergence {
                iteration,
                last_loss,
                last_finite,
            } => json!({ "iteration": iteration, "last_loss": last_loss, "last_finite": last_finite }),
            _ => Value::Null,
        };
        Self {
            status,
            code,
            message,
            detail,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            warn!("{} {}: {}", self.status, self.code, self.message);
        }
        let body = json!({ "error": { "code": self.code, "message": self.message, "detail": self.detail } });
        (self.status, Json(body)).into_response()
    }
}

async fn read_body(body: Body, limit: usize) -> Result<Bytes, ApiError> {
    to_bytes(body, limit).await.map_err(|_| {
        ApiError::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            "payload_too_large",
            format!("request body exceeds {limit} bytes"),
        )
    })
}

fn parse_json<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(bytes).map_err(|e| ApiError::unprocessable(format!("malformed request body: {e}")))
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(String::from).collect()
}

fn ingest_config(params: &HashMap<String, String>) -> Result<IngestConfig, ApiError> {
    let mut cfg = IngestConfig::default();
    if let Some(p) = params.get("projection") {
        match split_list(p).as_slice() {
            [x, y] => cfg.projection_columns = Some((x.clone(), y.clone())),
            _ => return Err(ApiError::new(StatusCode::BAD_REQUEST, "format", "projection must name two columns")),
        }
    }
    if let Some(d) = params.get("dims") {
        cfg.dimension_columns = Some(split_list(d));
    }
    if let Some(v) = params.get("pca_fallback") {
        cfg.pca_fallback = v
            .parse()
            .map_err(|_| ApiError::new(StatusCode::BAD_REQUEST, "format", "pca_fallback must be true or false"))?;
    }
    Ok(cfg)
}

async fn upload(
    State(state): State<Arc<AppState>>,
    Query(params): Query<HashMap<String, String>>,
    body: Body,
) -> Result<Response, ApiError> {
    let cfg = ingest_config(&params)?;
    let bytes = read_body(body, state.cfg.max_upload_bytes).await?;
    let (dataset, report) = load_csv(bytes.as_ref(), &cfg)?;
    let mut body = json!({
        "dims": dataset.dim_names(),
        "extents": dataset.extents(),
        "projection": dataset.projection(),
        "row_ids": dataset.row_ids(),
        "load_report": report,
    });
    let id = state.insert(dataset);
    info!("loaded dataset {id}: {} rows", report.rows_loaded);
    body["dataset_id"] = json!(id.to_string());
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryRequest {
    gesture: Gesture,
    #[serde(default)]
    algorithm: Algorithm,
    #[serde(default)]
    config: QueryConfig,
}

async fn query(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Body) -> Result<Response, ApiError> {
    let entry = state.get(&id)?;
    let req: QueryRequest = parse_json(&read_body(body, state.cfg.max_upload_bytes).await?)?;
    let job = tokio::task::spawn_blocking(move || {
        run_query(&entry.dataset, &entry.view, &req.gesture, req.algorithm, &req.config)
    });
    // A timed-out job keeps its blocking thread until it finishes; the
    // optimizer's iteration cap bounds how long that is.
    match tokio::time::timeout(state.cfg.query_timeout, job).await {
        Ok(Ok(result)) => Ok(Json(result?).into_response()),
        Ok(Err(e)) => Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", format!("query task failed: {e}"))),
        Err(_) => Err(ApiError::new(
            StatusCode::SERVICE_UNAVAILABLE,
            "timeout",
            format!("query exceeded {:?} compute budget", state.cfg.query_timeout),
        )),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvaluateRequest {
    predicate: PredicateWire,
    #[serde(default)]
    labels: Option<Vec<bool>>,
}

#[derive(Debug, Serialize)]
pub struct EvaluateResponse {
    pub membership: Vec<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub categories: Option<Vec<predbridge_core::PointCategory>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts: Option<predbridge_core::Confusion>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
}

async fn evaluate(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Body) -> Result<Response, ApiError> {
    let entry = state.get(&id)?;
    let req: EvaluateRequest = parse_json(&read_body(body, state.cfg.max_upload_bytes).await?)?;
    let pred = Predicate::from_wire(&req.predicate, &entry.dataset)?;
    let membership = evaluate_predicate(&pred, &entry.dataset)?;
    let mut resp = EvaluateResponse {
        membership,
        categories: None,
        counts: None,
        f1: None,
    };
    if let Some(labels) = req.labels {
        resp.categories = Some(categorize_labels(&labels, &resp.membership)?);
        resp.counts = Some(confusion(&resp.membership, &labels)?);
        resp.f1 = Some(f1_score(&resp.membership, &labels)?);
    }
    Ok(Json(resp).into_response())
}

async fn splom(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(params): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let entry = state.get(&id)?;
    let ds = &entry.dataset;
    let mut dims: Vec<String> = Vec::new();
    for d in split_list(params.get("dims").map(String::as_str).unwrap_or("")) {
        if !dims.contains(&d) {
            dims.push(d);
        }
    }
    if dims.is_empty() {
        return Err(ApiError::unprocessable("dims must name at least one dimension"));
    }
    let columns = dims
        .iter()
        .map(|d| {
            let j = ds
                .dim_index(d)
                .ok_or_else(|| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_dimension", format!("unknown dimension {d:?}")))?;
            Ok(json!({ "dim": d, "values": ds.column(j) }))
        })
        .collect::<Result<Vec<_>, ApiError>>()?;
    Ok(Json(json!({ "row_ids": ds.row_ids(), "columns": columns })).into_response())
}
