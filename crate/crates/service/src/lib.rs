//! HTTP facade over refinement sessions, concept decomposition, inter-class
//! similarity and detection evaluation.
//!
//! Every response is a view of engine state. Mutations on one session are
//! serialized by a per-session guard and, when a log directory is
//! configured, written to that session's event log before they are
//! published.

mod error;
mod state;
pub mod views;

use std::collections::BTreeSet;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::{BytesRejection, PathRejection};
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use classrefine_core::detmetrics::{
    mean_ap_with, simulate_detections, EvalConfig, EvalMode, EvalReport, Interpolation, DEFAULT_IOU_THRESHOLDS,
};
use classrefine_core::refine::{EventLog, FeedbackAdjustment, RefineEngine, Session};
use classrefine_core::store::{encode_definition, EmbeddingSource};
use classrefine_core::vectormath::AdjustmentWeights;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use uuid::Uuid;

pub use error::{ApiError, ERROR_CODES};
pub use state::{AppState, Dataset, ServiceConfig, SessionSlot, DEFAULT_MAX_UPLOAD_BYTES};

use state::DatasetUpload;

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    let limit = state.config.max_upload_bytes;
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/iterations", post(add_iteration))
        .route("/sessions/{id}/similarity", get(similarity))
        .route("/sessions/{id}/evaluate", post(evaluate))
        .route("/sessions/{id}/undo", post(undo))
        .route("/sessions/{id}/export", post(export))
        .route("/datasets", post(upload_dataset))
        .fallback(not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such endpoint")
}

async fn method_not_allowed() -> ApiError {
    ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "MethodNotAllowed", "method not allowed on this endpoint")
}

/// Parses a JSON object body. An empty body reads as `{}`; syntax errors
/// are 400, shape errors 422.
fn parse_body<T: DeserializeOwned>(body: Result<Bytes, BytesRejection>) -> ApiResult<T> {
    let bytes = body.map_err(|r| {
        if r.status() == StatusCode::PAYLOAD_TOO_LARGE {
            ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, "PayloadTooLarge", r.body_text())
        } else {
            ApiError::malformed(r.body_text())
        }
    })?;
    let value: serde_json::Value = if bytes.iter().all(u8::is_ascii_whitespace) {
        serde_json::Value::Object(Default::default())
    } else {
        serde_json::from_slice(&bytes).map_err(|e| ApiError::malformed(e.to_string()))?
    };
    if !value.is_object() {
        return Err(ApiError::invalid("body must be a JSON object"));
    }
    serde_json::from_value(value).map_err(|e| ApiError::invalid(e.to_string()))
}

fn path_id(id: Result<Path<String>, PathRejection>) -> ApiResult<String> {
    id.map(|Path(id)| id)
        .map_err(|_| ApiError::unknown_session("<invalid>"))
}

async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    F: FnOnce() -> ApiResult<T> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

/// Runs `f` on a private copy of the session under the writer guard, logs
/// the new events, then publishes the copy. On any error the published
/// session is untouched.
async fn mutate<T, F>(state: &Arc<AppState>, id: &str, f: F) -> ApiResult<T>
where
    F: FnOnce(&RefineEngine, &dyn EmbeddingSource, &mut Session) -> ApiResult<T> + Send + 'static,
    T: Send + 'static,
{
    let slot = state.slot(id)?;
    let mut guard = slot.writer.lock().await;
    let mut session = (*slot.snapshot()).clone();
    let before = session.events().len();
    let st = state.clone();
    let (session, out) = blocking(move || {
        let out = f(&st.engine, st.source.as_ref(), &mut session)?;
        Ok((session, out))
    })
    .await?;
    if let Some(log) = guard.as_mut() {
        for ev in &session.events()[before..] {
            log.append(ev)?;
        }
    }
    slot.publish(session);
    Ok(out)
}

fn resolve_class(session: &Session, class: Option<String>) -> ApiResult<String> {
    match class {
        Some(c) => {
            session.class(c.trim())?;
            Ok(c.trim().to_owned())
        }
        None if session.classes.len() == 1 => Ok(session.classes[0].definition.label.clone()),
        None => Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "ClassRequired",
            "session has several classes; name one in \"class\"",
        )),
    }
}

#[derive(Deserialize)]
struct CreateSessionRequest {
    class_texts: Vec<String>,
    #[serde(default)]
    weights: Option<AdjustmentWeights>,
}

async fn create_session(State(state): State<Arc<AppState>>, body: Result<Bytes, BytesRejection>) -> ApiResult<Response> {
    let req: CreateSessionRequest = parse_body(body)?;
    let st = state.clone();
    let session = blocking(move || {
        Ok(st
            .engine
            .create_session(&req.class_texts, st.source.as_ref(), req.weights.unwrap_or_default())?)
    })
    .await?;
    let log = match &state.config.log_dir {
        Some(dir) => {
            let mut log = EventLog::create(dir.join(format!("{}.jsonl", session.id)))?;
            log.append(&session.events()[0])?;
            Some(log)
        }
        None => None,
    };
    let view = views::created(&session, state.engine.dictionary(), state.config.top_k);
    state.insert_session(session, log);
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

async fn get_session(
    State(state): State<Arc<AppState>>,
    id: Result<Path<String>, PathRejection>,
) -> ApiResult<Json<views::SessionView>> {
    let slot = state.slot(&path_id(id)?)?;
    Ok(Json(views::session(&slot.snapshot(), state.engine.dictionary(), state.config.top_k)))
}

#[derive(Deserialize)]
struct IterationRequest {
    #[serde(default)]
    class: Option<String>,
    #[serde(default)]
    added: Vec<String>,
    #[serde(default)]
    removed: Vec<String>,
    #[serde(default)]
    unselected: BTreeSet<String>,
    #[serde(default)]
    weights: Option<AdjustmentWeights>,
}

async fn add_iteration(
    State(state): State<Arc<AppState>>,
    id: Result<Path<String>, PathRejection>,
    body: Result<Bytes, BytesRejection>,
) -> ApiResult<Json<views::IterationView>> {
    let id = path_id(id)?;
    state.slot(&id)?;
    let req: IterationRequest = parse_body(body)?;
    let k = state.config.top_k;
    let st = state.clone();
    mutate(&state, &id, move |engine, source, session| {
        let label = resolve_class(session, req.class)?;
        let weights = req.weights.unwrap_or(session.weights);
        let adj = if req.added.is_empty() && req.removed.is_empty() && req.unselected.is_empty() {
            FeedbackAdjustment::probe(weights)
        } else {
            FeedbackAdjustment::new(req.added, req.removed, req.unselected, weights)?
        };
        let rec = engine.apply_feedback(session, &label, adj, source)?;
        Ok(views::iteration(&label, rec, st.engine.dictionary(), k))
    })
    .await
    .map(Json)
}

async fn similarity(
    State(state): State<Arc<AppState>>,
    id: Result<Path<String>, PathRejection>,
) -> ApiResult<Json<views::SimilarityView>> {
    let slot = state.slot(&path_id(id)?)?;
    let report = slot.snapshot().similarity()?;
    Ok(Json(views::similarity(report)))
}

#[derive(Deserialize)]
struct EvaluateRequest {
    dataset_id: String,
    #[serde(default)]
    class: Option<String>,
    #[serde(default)]
    mode: Option<EvalMode>,
    #[serde(default)]
    thresholds: Option<Vec<f64>>,
    #[serde(default)]
    interpolation: Option<Interpolation>,
    /// Ground-truth category scored as the target; defaults to the
    /// dataset's category, then to the class label.
    #[serde(default)]
    category: Option<String>,
}

async fn evaluate(
    State(state): State<Arc<AppState>>,
    id: Result<Path<String>, PathRejection>,
    body: Result<Bytes, BytesRejection>,
) -> ApiResult<Json<EvalReport>> {
    let id = path_id(id)?;
    state.slot(&id)?;
    let req: EvaluateRequest = parse_body(body)?;
    let dataset = state.dataset(&req.dataset_id)?;
    mutate(&state, &id, move |engine, _, session| {
        let label = resolve_class(session, req.class)?;
        let current = session.class(&label)?.definition.current_embedding.clone();
        let category = req
            .category
            .or_else(|| dataset.category.clone())
            .unwrap_or_else(|| label.clone());
        let detections = match &dataset.detections {
            Some(d) => d.clone(),
            None => simulate_detections(&dataset.ground_truth, &current, &category, dataset.score_floor, dataset.jitter)?,
        };
        let config = EvalConfig {
            iou_thresholds: req.thresholds.unwrap_or_else(|| DEFAULT_IOU_THRESHOLDS.to_vec()),
            interpolation: req.interpolation.unwrap_or_default(),
        };
        let report = mean_ap_with(
            &detections,
            &dataset.ground_truth,
            &category,
            &config,
            req.mode.unwrap_or(EvalMode::Modified),
        )?;
        engine.attach_evaluation(session, &label, report.clone())?;
        Ok(report)
    })
    .await
    .map(Json)
}

#[derive(Deserialize)]
struct ClassRequest {
    #[serde(default)]
    class: Option<String>,
}

async fn undo(
    State(state): State<Arc<AppState>>,
    id: Result<Path<String>, PathRejection>,
    body: Result<Bytes, BytesRejection>,
) -> ApiResult<Json<views::ClassView>> {
    let id = path_id(id)?;
    state.slot(&id)?;
    let req: ClassRequest = parse_body(body)?;
    let st = state.clone();
    mutate(&state, &id, move |engine, _, session| {
        let label = resolve_class(session, req.class)?;
        engine.undo(session, &label)?;
        Ok(views::class(session.class(&label)?, st.engine.dictionary(), st.config.top_k))
    })
    .await
    .map(Json)
}

async fn export(
    State(state): State<Arc<AppState>>,
    id: Result<Path<String>, PathRejection>,
    body: Result<Bytes, BytesRejection>,
) -> ApiResult<Response> {
    let id = path_id(id)?;
    state.slot(&id)?;
    let req: ClassRequest = parse_body(body)?;
    let bytes = mutate(&state, &id, move |engine, _, session| {
        let label = resolve_class(session, req.class)?;
        Ok(encode_definition(&engine.export_definition(session, &label)?))
    })
    .await?;
    Ok((
        StatusCode::OK,
        [
            (header::CONTENT_TYPE, "application/octet-stream"),
            (header::CONTENT_DISPOSITION, "attachment; filename=\"definition.emb\""),
        ],
        bytes,
    )
        .into_response())
}

#[derive(serde::Serialize)]
struct DatasetView {
    dataset_id: String,
    images: usize,
    annotations: usize,
    detections: Option<usize>,
    category: Option<String>,
}

async fn upload_dataset(State(state): State<Arc<AppState>>, body: Result<Bytes, BytesRejection>) -> ApiResult<Response> {
    let raw = body.map_err(|r| {
        if r.status() == StatusCode::PAYLOAD_TOO_LARGE {
            ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, "PayloadTooLarge", r.body_text())
        } else {
            ApiError::malformed(r.body_text())
        }
    })?;
    let upload: DatasetUpload = parse_body(Ok(raw.clone()))?;
    let id = Uuid::new_v4().to_string();
    let ds = Dataset::from_upload(id.clone(), upload)?;
    if let Some(dir) = &state.config.log_dir {
        let path = dir.join("datasets").join(format!("{id}.json"));
        std::fs::write(&path, &raw)
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Storage", format!("{}: {e}", path.display())))?;
    }
    let view = DatasetView {
        dataset_id: id,
        images: ds.ground_truth.images().len(),
        annotations: ds.ground_truth.ground_truth().len(),
        detections: ds.detections.as_ref().map(Vec::len),
        category: ds.category.clone(),
    };
    state.insert_dataset(ds);
    Ok((StatusCode::CREATED, Json(view)).into_response())
}
