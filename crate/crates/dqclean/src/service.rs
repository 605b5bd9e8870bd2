//! HTTP API over a [`Store`].

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use dqclean_core::aggregate::AggregationMode;
use dqclean_core::data::Metric;
use dqclean_core::protocol::Verdict;
use dqclean_core::rank::NoiseType;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, BootstrapOptions};
use crate::error::{Error, ErrorClass};
use crate::store::{NewSession, RegisterDataset, Store};

/// Header naming the annotator when a session request omits it.
pub const ANNOTATOR_HEADER: &str = "x-annotator-id";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub code: String,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self { status: status.as_u16(), code: code.to_string(), message: message.into() }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e.class() {
            ErrorClass::Invalid => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorClass::NotFound => StatusCode::NOT_FOUND,
            ErrorClass::Conflict => StatusCode::CONFLICT,
            ErrorClass::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status.is_server_error() {
            log::error!("{e}");
        }
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "BadRequest", r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "BadRequest", r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;
type AppState = State<Arc<Store>>;

/// Runs blocking store work (file IO, fsync, ranking) off the async workers.
async fn blocking<T, F>(store: &Arc<Store>, f: F) -> ApiResult<T>
where
    F: FnOnce(&Store) -> crate::error::Result<T> + Send + 'static,
    T: Send + 'static,
{
    let store = store.clone();
    tokio::task::spawn_blocking(move || f(&store))
        .await
        .map_err(|_| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", "request handler failed"))?
        .map_err(ApiError::from)
}

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/datasets", get(list_datasets).post(register_dataset))
        .route("/datasets/{name}/rank", post(rank))
        .route("/datasets/{name}/aggregate", get(aggregate))
        .route("/datasets/{name}/clean", post(clean))
        .route("/datasets/{name}/stats/agreement", get(agreement))
        .route("/datasets/{name}/evaluate", post(evaluate))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/next", get(next))
        .route("/sessions/{id}/answer", post(answer))
        .route("/sessions/{id}/status", get(status))
        .route("/sessions/{id}/sensitivity", get(sensitivity))
        .route("/images/{id}", get(image))
        .with_state(store)
}

/// Serves until Ctrl-C.
pub async fn serve(store: Arc<Store>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn list_datasets(State(store): AppState) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(&store, |s| Ok(s.datasets())).await?))
}

async fn register_dataset(
    State(store): AppState,
    body: Result<Json<RegisterDataset>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(req) = body?;
    let summary = blocking(&store, move |s| s.register_dataset(&req)).await?;
    Ok((StatusCode::CREATED, Json(summary)))
}

#[derive(Debug, Deserialize)]
struct RankBody {
    noise_type: NoiseType,
    #[serde(default)]
    metric: Metric,
}

async fn rank(
    State(store): AppState,
    Path(name): Path<String>,
    body: Result<Json<RankBody>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(req) = body?;
    Ok(Json(blocking(&store, move |s| s.rank(&name, req.noise_type, req.metric)).await?))
}

#[derive(Debug, Deserialize)]
struct SessionBody {
    dataset: String,
    noise_type: NoiseType,
    #[serde(default)]
    annotator: Option<String>,
    #[serde(default)]
    p_plus: Option<f64>,
    #[serde(default)]
    p_chance: Option<f64>,
    #[serde(default)]
    rounding: Option<dqclean_core::protocol::Rounding>,
}

async fn create_session(
    State(store): AppState,
    headers: HeaderMap,
    body: Result<Json<SessionBody>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(body) = body?;
    let annotator = body
        .annotator
        .or_else(|| headers.get(ANNOTATOR_HEADER).and_then(|v| v.to_str().ok()).map(String::from))
        .unwrap_or_default();
    let req = NewSession {
        dataset: body.dataset,
        noise_type: body.noise_type,
        annotator,
        p_plus: body.p_plus,
        p_chance: body.p_chance,
        rounding: body.rounding,
        session_id: None,
    };
    let created = blocking(&store, move |s| s.create_session(&req)).await?;
    Ok((StatusCode::CREATED, Json(created)))
}

async fn next(State(store): AppState, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(&store, move |s| s.next(&id)).await?))
}

#[derive(Debug, Deserialize)]
struct AnswerBody {
    ids: Vec<String>,
    verdict: Verdict,
}

async fn answer(
    State(store): AppState,
    Path(id): Path<String>,
    body: Result<Json<AnswerBody>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(req) = body?;
    Ok(Json(blocking(&store, move |s| s.answer(&id, &req.ids, req.verdict)).await?))
}

async fn status(State(store): AppState, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(&store, move |s| s.status(&id)).await?))
}

#[derive(Debug, Deserialize)]
struct ModeQuery {
    mode: Option<String>,
}

fn parse_mode(mode: Option<&str>) -> Result<AggregationMode, Error> {
    mode.map_or(Ok(AggregationMode::default()), |m| m.parse().map_err(Error::Aggregate))
}

async fn aggregate(
    State(store): AppState,
    Path(name): Path<String>,
    query: Result<Query<ModeQuery>, QueryRejection>,
) -> ApiResult<impl IntoResponse> {
    let Query(q) = query?;
    let mode = parse_mode(q.mode.as_deref())?;
    Ok(Json(blocking(&store, move |s| analysis::aggregate_dataset(s, &name, mode)).await?))
}

#[derive(Debug, Deserialize)]
struct CleanBody {
    #[serde(default)]
    mode: Option<String>,
    #[serde(default)]
    seed: u64,
}

async fn clean(
    State(store): AppState,
    Path(name): Path<String>,
    body: Result<Json<CleanBody>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(req) = body?;
    let mode = parse_mode(req.mode.as_deref())?;
    Ok(Json(blocking(&store, move |s| analysis::clean(s, &name, mode, req.seed)).await?))
}

#[derive(Debug, Deserialize)]
struct BootstrapQuery {
    reps: Option<usize>,
    level: Option<f64>,
    seed: Option<u64>,
}

impl BootstrapQuery {
    fn options(&self) -> BootstrapOptions {
        let d = BootstrapOptions::default();
        BootstrapOptions {
            reps: self.reps.unwrap_or(d.reps),
            level: self.level.unwrap_or(d.level),
            seed: self.seed.unwrap_or(d.seed),
        }
    }
}

async fn agreement(
    State(store): AppState,
    Path(name): Path<String>,
    query: Result<Query<BootstrapQuery>, QueryRejection>,
) -> ApiResult<impl IntoResponse> {
    let Query(q) = query?;
    let opts = q.options();
    Ok(Json(blocking(&store, move |s| analysis::agreement(s, &name, opts)).await?))
}

#[derive(Debug, Deserialize)]
struct EvaluateBody {
    scores_csv: PathBuf,
    #[serde(default)]
    mode: Option<String>,
    #[serde(default)]
    reps: Option<usize>,
    #[serde(default)]
    level: Option<f64>,
    #[serde(default)]
    seed: Option<u64>,
    /// Seed for the cleaned list; defaults to `seed`.
    #[serde(default)]
    clean_seed: Option<u64>,
}

async fn evaluate(
    State(store): AppState,
    Path(name): Path<String>,
    body: Result<Json<EvaluateBody>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(req) = body?;
    let mode = parse_mode(req.mode.as_deref())?;
    let opts = BootstrapQuery { reps: req.reps, level: req.level, seed: req.seed }.options();
    let clean_seed = req.clean_seed.unwrap_or(opts.seed);
    Ok(Json(blocking(&store, move |s| analysis::evaluate(s, &name, &req.scores_csv, mode, clean_seed, opts)).await?))
}

#[derive(Debug, Deserialize)]
struct GridQuery {
    grid: Option<String>,
}

async fn sensitivity(
    State(store): AppState,
    Path(id): Path<String>,
    query: Result<Query<GridQuery>, QueryRejection>,
) -> ApiResult<impl IntoResponse> {
    let Query(q) = query?;
    let grid = q.grid.as_deref().map(analysis::parse_grid).transpose()?;
    Ok(Json(blocking(&store, move |s| analysis::sensitivity(s, &id, grid.as_deref())).await?))
}

#[derive(Debug, Deserialize)]
struct ImageQuery {
    dataset: String,
}

async fn image(
    State(store): AppState,
    Path(id): Path<String>,
    query: Result<Query<ImageQuery>, QueryRejection>,
) -> ApiResult<Response> {
    let Query(q) = query?;
    let (path, bytes) = blocking(&store, move |s| {
        let ds = s.dataset(&q.dataset)?;
        let path = ds.image_path(&id).ok_or(Error::UnknownId(id.clone()))?;
        let bytes = std::fs::read(&path).map_err(|_| Error::MissingImage { id, path: path.clone() })?;
        Ok((path, bytes))
    })
    .await
    .map_err(|e| match e.code.as_str() {
        "UnknownId" | "MissingImage" => ApiError { status: StatusCode::NOT_FOUND.as_u16(), ..e },
        _ => e,
    })?;
    let mime = image::ImageFormat::from_path(&path).map(|f| f.to_mime_type()).unwrap_or("application/octet-stream");
    Ok(([(header::CONTENT_TYPE, mime)], bytes).into_response())
}
