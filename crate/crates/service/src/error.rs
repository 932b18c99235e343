use serde::Serialize;
use serde_json::Value;

/// The error object every endpoint returns: `{code, message, detail}`.
#[derive(Debug, Clone, PartialEq, Serialize, thiserror::Error)]
#[error("{code}: {message}")]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub code: &'static str,
    pub message: String,
    pub detail: Value,
}

impl ApiError {
    pub fn new(status: u16, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            detail: Value::Null,
        }
    }

    pub fn with_detail(mut self, detail: impl Serialize) -> Self {
        self.detail = serde_json::to_value(detail).unwrap_or(Value::Null);
        self
    }

    pub fn validation(code: &'static str, message: impl Into<String>, detail: impl Serialize) -> Self {
        ApiError::new(422, code, message).with_detail(detail)
    }

    pub fn conflict(code: &'static str, message: impl Into<String>) -> Self {
        ApiError::new(409, code, message)
    }

    pub fn unknown_session() -> Self {
        ApiError::new(401, "unknown_session", "no session has this token")
    }

    pub fn unknown_task(id: &str) -> Self {
        ApiError::new(404, "unknown_task", format!("no task `{id}`"))
    }

    pub fn storage(e: &std::io::Error) -> Self {
        ApiError::new(503, "storage_unavailable", format!("the record log could not be written: {e}"))
    }
}
