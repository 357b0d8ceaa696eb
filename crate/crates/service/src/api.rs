//! HTTP routes.
//!
//! | route                          | body                       | success               |
//! |--------------------------------|----------------------------|-----------------------|
//! | `POST /sessions`               | session config JSON        | 201 id + instruction  |
//! | `POST /sessions/{id}/tap`      | `{"timestamp": ms}`        | 200 instruction       |
//! | `POST /sessions/{id}/frames`   | PPM or PNG bytes           | 200 detection JSON    |
//! | `GET /sessions/{id}/instruction` |                          | 200 instruction       |
//! | `GET /sessions/{id}/report`    | `?actualErrors=n`          | 200 report JSON       |
//!
//! After the last move the session waits for feedback; the next tap computes
//! the perceived error count from the stored frames and issues it.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use blockvision_core::assessment::{AssessmentError, ErrorMode};
use blockvision_core::detect::{detect_frame, PipelineConfig};
use blockvision_core::io::decode_image;
use blockvision_core::session::{Instruction, Phase, SessionConfig, SessionError};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::store::{SharedRecord, Store, StoreError};

pub struct AppState {
    pub store: Store,
    pub pipeline: PipelineConfig,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/tap", post(tap))
        .route("/sessions/{id}/frames", post(ingest_frame))
        .route("/sessions/{id}/instruction", get(instruction))
        .route("/sessions/{id}/report", get(report))
        .with_state(state)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match e {
            SessionError::InvalidConfig(_) => StatusCode::BAD_REQUEST,
            SessionError::TapInPhase(_) | SessionError::NotInFeedbackPhase => StatusCode::CONFLICT,
            SessionError::OutOfOrderTimestamp { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            SessionError::MalformedLog(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.to_string())
    }
}

impl From<AssessmentError> for ApiError {
    fn from(e: AssessmentError) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Session(e) => e.into(),
            StoreError::Assessment(e) => e.into(),
            other => {
                log::error!("{other}");
                Self::new(StatusCode::INTERNAL_SERVER_ERROR, other.to_string())
            }
        }
    }
}

fn parse_json<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    let text = if body.iter().all(u8::is_ascii_whitespace) { &b"{}"[..] } else { &body[..] };
    serde_json::from_slice(text).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("invalid JSON: {e}")))
}

fn lookup(state: &AppState, id: &str) -> Result<SharedRecord, ApiError> {
    state
        .store
        .get(id)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no session {id}")))
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct CreateRequest {
    #[serde(flatten)]
    config: SessionConfig,
    #[serde(default)]
    error_mode: ErrorMode,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CreateResponse {
    pub session_id: String,
    pub instruction: Instruction,
}

async fn create_session(State(state): State<Arc<AppState>>, body: Bytes) -> Result<impl IntoResponse, ApiError> {
    let req: CreateRequest = parse_json(&body)?;
    let rec = state.store.create(req.config, req.error_mode)?;
    let rec = rec.lock().await;
    log::info!("created session {}", rec.id);
    let resp = CreateResponse {
        session_id: rec.id.clone(),
        instruction: rec.session.current_instruction(),
    };
    Ok((StatusCode::CREATED, Json(resp)))
}

#[derive(Debug, Deserialize)]
struct TapRequest {
    timestamp: u64,
}

async fn tap(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Instruction>, ApiError> {
    let req: TapRequest = parse_json(&body)?;
    let rec = lookup(&state, &id)?;
    let mut rec = rec.lock().await;
    if rec.session.phase() == Phase::Feedback {
        let perceived = rec.perceived_errors()?;
        let (instruction, event) = rec.session.finalize(perceived, req.timestamp)?;
        rec.append_event(&event)?;
        // Accuracy is undefined when false positives exceed the moves; the
        // feedback still goes out and the report route reports why.
        match rec.build_report(0) {
            Ok(report) => rec.put_report(report)?,
            Err(e) => log::warn!("session {id}: no report: {e}"),
        }
        return Ok(Json(instruction));
    }
    let (instruction, event) = rec.session.record_tap(req.timestamp)?;
    rec.append_event(&event)?;
    Ok(Json(instruction))
}

async fn ingest_frame(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let rec = lookup(&state, &id)?;
    let frame_id = {
        let rec = rec.lock().await;
        match rec.moves() {
            0 => return Err(ApiError::new(StatusCode::CONFLICT, "no move has been completed yet")),
            n => n - 1,
        }
    };
    let img = decode_image(&body).map_err(|e| ApiError::new(StatusCode::UNSUPPORTED_MEDIA_TYPE, e.to_string()))?;
    let cfg = state.pipeline.clone();
    let detection = tokio::task::spawn_blocking(move || detect_frame(&img, &cfg, frame_id))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    let body = detection.to_json();
    let status = if detection.aborted { StatusCode::UNPROCESSABLE_ENTITY } else { StatusCode::OK };
    rec.lock().await.put_frame(detection)?;
    Ok((status, [(header::CONTENT_TYPE, "application/json")], body).into_response())
}

async fn instruction(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Instruction>, ApiError> {
    let rec = lookup(&state, &id)?;
    let rec = rec.lock().await;
    Ok(Json(rec.session.current_instruction()))
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct ReportQuery {
    actual_errors: Option<u32>,
}

async fn report(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<ReportQuery>,
) -> Result<Response, ApiError> {
    let rec = lookup(&state, &id)?;
    let rec = rec.lock().await;
    let report = match (&rec.report, q.actual_errors) {
        (Some(r), None) => r.clone(),
        _ if matches!(rec.session.phase(), Phase::Feedback | Phase::Done) => rec.build_report(q.actual_errors.unwrap_or(0))?,
        _ => {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                format!("no report before the session ends (phase {})", rec.session.phase()),
            ))
        }
    };
    Ok(([(header::CONTENT_TYPE, "application/json")], report.to_json()).into_response())
}
