//! The `atlasd` HTTP API.
//!
//! Every error body is `{"code": ..., "message": ...}` with a code from
//! [`ApiError::code`]. Engine calls run on the blocking pool because
//! ingest fsyncs and trajectory builds do dense linear algebra.

use std::convert::Infallible;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event as SseEvent, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use field_atlas_core::Error as CoreError;
use futures::Stream;
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;

use crate::engine::{CardRequest, Engine, Event, NewSession};
use crate::error::AtlasError;
use crate::format::TrajectoryRecord;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn code(&self) -> &'static str {
        self.code
    }
}

impl From<AtlasError> for ApiError {
    fn from(e: AtlasError) -> Self {
        use StatusCode as S;
        let (status, code) = match &e {
            AtlasError::Core(c) => match c {
                CoreError::InvalidTimestamp(_) => (S::BAD_REQUEST, "invalid_timestamp"),
                CoreError::InvalidGeoPoint { .. } => (S::BAD_REQUEST, "invalid_geo"),
                CoreError::InvalidGeofence(_) => (S::BAD_REQUEST, "invalid_geofence"),
                CoreError::EmbedDimTooSmall(_) | CoreError::DimMismatch { .. } => {
                    (S::BAD_REQUEST, "invalid_embed_dim")
                }
                CoreError::ProvocationNotGated => (S::UNPROCESSABLE_ENTITY, "provocation_not_allowed"),
                CoreError::NoContentTokens(_) => (S::UNPROCESSABLE_ENTITY, "no_content_tokens"),
                CoreError::GateRejected(_) => (S::UNPROCESSABLE_ENTITY, "gate_rejected"),
                CoreError::EmptyTrajectory | CoreError::NoCaptures(_) => (S::NOT_FOUND, "empty_trajectory"),
                CoreError::ForeignCard { .. } | CoreError::InvalidLink(_) | CoreError::InvalidParam(_) => {
                    (S::BAD_REQUEST, "invalid_request")
                }
                CoreError::Chain { .. } => (S::INTERNAL_SERVER_ERROR, "chain_fault"),
            },
            AtlasError::SessionNotFound(_) => (S::NOT_FOUND, "session_not_found"),
            AtlasError::LearnerNotFound(_) => (S::NOT_FOUND, "learner_not_found"),
            AtlasError::CardNotFound(_) => (S::NOT_FOUND, "card_not_found"),
            AtlasError::SessionExists(_) => (S::CONFLICT, "session_exists"),
            AtlasError::InvalidRequest(_) => (S::BAD_REQUEST, "invalid_request"),
            AtlasError::Io { .. } => (S::INTERNAL_SERVER_ERROR, "storage_error"),
            AtlasError::Format { .. }
            | AtlasError::BadCard { .. }
            | AtlasError::MissingHeader
            | AtlasError::InFile { .. } => {
                (S::INTERNAL_SERVER_ERROR, "corrupt_session")
            }
            AtlasError::Config(_) => (S::INTERNAL_SERVER_ERROR, "config_error"),
        };
        if status.is_server_error() {
            tracing::error!(error = %e, "request failed");
        }
        ApiError::new(status, code, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        let code = match r {
            JsonRejection::MissingJsonContentType(_) => "unsupported_media_type",
            _ => "invalid_json",
        };
        ApiError::new(StatusCode::BAD_REQUEST, code, r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_query", r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            code: self.code.to_string(),
            message: self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;
type Shared = Arc<Engine>;

async fn blocking<T, F>(engine: &Shared, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&Engine) -> crate::Result<T> + Send + 'static,
{
    let engine = Arc::clone(engine);
    tokio::task::spawn_blocking(move || f(&engine))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map_err(ApiError::from)
}

pub fn router(engine: Shared) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/cards", post(ingest).get(list_cards))
        .route("/sessions/{id}/trajectory", get(trajectory))
        .route("/sessions/{id}/authenticity", get(authenticity))
        .route("/sessions/{id}/events", get(events))
        .route("/learners/{id}/links", get(learner_links))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route") })
        .with_state(engine)
}

#[derive(Serialize)]
struct SessionCreated {
    #[serde(flatten)]
    header: field_atlas_core::model::SessionHeader,
    head_hash: String,
}

async fn create_session(
    State(engine): State<Shared>,
    body: Result<Json<NewSession>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(req) = body?;
    let state = blocking(&engine, move |e| e.create_session(req)).await?;
    let created = SessionCreated {
        header: state.session.header().clone(),
        head_hash: state.session.head_hash().to_string(),
    };
    Ok((StatusCode::CREATED, Json(created)))
}

async fn ingest(
    State(engine): State<Shared>,
    Path(id): Path<String>,
    body: Result<Json<CardRequest>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(req) = body?;
    let outcome = blocking(&engine, move |e| e.ingest(&id, req)).await?;
    let status = if outcome.replayed { StatusCode::OK } else { StatusCode::CREATED };
    Ok((status, Json(outcome)))
}

#[derive(Deserialize)]
struct AfterQuery {
    after: Option<usize>,
}

async fn list_cards(
    State(engine): State<Shared>,
    Path(id): Path<String>,
    query: Result<Query<AfterQuery>, QueryRejection>,
) -> ApiResult<impl IntoResponse> {
    let Query(q) = query?;
    let cards = blocking(&engine, move |e| e.cards_after(&id, q.after)).await?;
    Ok(Json(cards))
}

async fn trajectory(State(engine): State<Shared>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let t = blocking(&engine, move |e| e.trajectory(&id)).await?;
    Ok(Json(TrajectoryRecord::from(&t)))
}

async fn authenticity(State(engine): State<Shared>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let report = blocking(&engine, move |e| e.authenticity(&id)).await?;
    Ok(Json(report))
}

async fn learner_links(State(engine): State<Shared>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let links = blocking(&engine, move |e| e.learner_links(&id)).await?;
    Ok(Json(links))
}

fn sse_event(ev: &Event) -> SseEvent {
    let data = serde_json::to_string(ev).expect("events serialize");
    let mut out = SseEvent::default().event(ev.name()).data(data);
    if let Event::CardAppended { card, .. } = ev {
        out = out.id(card.seq.to_string());
    }
    out
}

/// Converts a broadcast receiver into an event stream. A lagging client
/// gets a `lagged` event and should resync with `GET /cards?after=`.
pub fn event_stream(rx: broadcast::Receiver<Event>) -> impl Stream<Item = Result<SseEvent, Infallible>> {
    futures::stream::unfold(rx, |mut rx| async move {
        match rx.recv().await {
            Ok(ev) => Some((Ok(sse_event(&ev)), rx)),
            Err(broadcast::error::RecvError::Lagged(n)) => {
                Some((Ok(SseEvent::default().event("lagged").data(n.to_string())), rx))
            }
            Err(broadcast::error::RecvError::Closed) => None,
        }
    })
}

async fn events(State(engine): State<Shared>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let rx = engine.subscribe(&id)?;
    Ok(Sse::new(event_stream(rx)).keep_alive(KeepAlive::default()))
}
