use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::ApiError;
use crate::store::{Store, Submission};
use crate::task::TaskDefinition;

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

type Shared = Arc<Store>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Consent {
    consent: bool,
}

fn body<T: DeserializeOwned>(bytes: Result<Bytes, BytesRejection>) -> Result<T, ApiError> {
    let bytes = bytes.map_err(|e| ApiError::new(e.status().as_u16(), "unreadable_body", e.body_text()))?;
    ciflow::standoff::parse_json(&bytes).map_err(|e| match e {
        ciflow::FormatError::Schema { path, message } => {
            ApiError::validation("invalid_body", "the request body does not match the schema", json!({"path": path, "message": message}))
        }
        other => ApiError::validation("invalid_body", other.to_string(), serde_json::Value::Null),
    })
}

/// Runs a store call off the async workers; log writes block on fsync.
async fn blocking<T, F>(store: Shared, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&Store) -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(move || f(&store))
        .await
        .map_err(|e| ApiError::new(500, "internal", e.to_string()))?
}

fn ok<T: Serialize>(status: StatusCode, value: T) -> Response {
    (status, Json(value)).into_response()
}

async fn create_task(State(store): State<Shared>, bytes: Result<Bytes, BytesRejection>) -> Result<Response, ApiError> {
    let definition: TaskDefinition = body(bytes)?;
    let id = blocking(store, move |s| s.create_task(definition)).await?;
    Ok(ok(StatusCode::CREATED, json!({"task_id": id})))
}

async fn open_session(
    State(store): State<Shared>,
    Path(task_id): Path<String>,
    bytes: Result<Bytes, BytesRejection>,
) -> Result<Response, ApiError> {
    let Consent { consent } = body(bytes)?;
    let opened = blocking(store, move |s| s.open_session(&task_id, consent)).await?;
    Ok(ok(StatusCode::CREATED, opened))
}

async fn next_item(State(store): State<Shared>, Path(token): Path<String>) -> Result<Response, ApiError> {
    let next = blocking(store, move |s| s.next_item(&token)).await?;
    Ok(ok(StatusCode::OK, next))
}

async fn submit(
    State(store): State<Shared>,
    Path(token): Path<String>,
    bytes: Result<Bytes, BytesRejection>,
) -> Result<Response, ApiError> {
    let submission: Submission = body(bytes)?;
    let result = blocking(store, move |s| s.submit(&token, submission)).await?;
    Ok(ok(StatusCode::OK, result))
}

async fn export(State(store): State<Shared>, Path(task_id): Path<String>) -> Result<Response, ApiError> {
    let wire = blocking(store, move |s| s.export(&task_id)).await?;
    Ok(ok(StatusCode::OK, wire))
}

async fn aggregate(State(store): State<Shared>, Path(task_id): Path<String>) -> Result<Response, ApiError> {
    let agg = blocking(store, move |s| s.aggregate(&task_id)).await?;
    Ok(ok(StatusCode::OK, agg))
}

async fn not_found() -> ApiError {
    ApiError::new(404, "not_found", "no such endpoint")
}

async fn method_not_allowed() -> ApiError {
    ApiError::new(405, "method_not_allowed", "this endpoint does not accept that method")
}

/// All endpoints, backed by `store`.
pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/tasks", post(create_task))
        .route("/tasks/{id}/sessions", post(open_session))
        .route("/tasks/{id}/export", get(export))
        .route("/tasks/{id}/aggregate", get(aggregate))
        .route("/sessions/{token}/next", get(next_item))
        .route("/sessions/{token}/submit", post(submit))
        .fallback(not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .with_state(store)
}
