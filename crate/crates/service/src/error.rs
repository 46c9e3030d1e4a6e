use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tissuelens::{Error, ErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApiErrorCode {
    BadRequest,
    NotFound,
    Integrity,
    Capability,
    Conflict,
    Internal,
}

impl ApiErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            ApiErrorCode::BadRequest => StatusCode::BAD_REQUEST,
            ApiErrorCode::NotFound => StatusCode::NOT_FOUND,
            ApiErrorCode::Integrity => StatusCode::INTERNAL_SERVER_ERROR,
            ApiErrorCode::Capability => StatusCode::UNPROCESSABLE_ENTITY,
            ApiErrorCode::Conflict => StatusCode::CONFLICT,
            ApiErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl From<ErrorKind> for ApiErrorCode {
    fn from(kind: ErrorKind) -> Self {
        match kind {
            ErrorKind::BadRequest => ApiErrorCode::BadRequest,
            ErrorKind::NotFound => ApiErrorCode::NotFound,
            ErrorKind::Integrity => ApiErrorCode::Integrity,
            ErrorKind::Capability => ApiErrorCode::Capability,
            ErrorKind::Conflict => ApiErrorCode::Conflict,
            ErrorKind::Internal => ApiErrorCode::Internal,
        }
    }
}

/// JSON error body: `{"code", "message", "detail"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ApiErrorCode,
    pub message: String,
    #[serde(default)]
    pub detail: Value,
}

pub type ApiResult<T> = Result<T, ApiError>;

impl ApiError {
    pub fn new(code: ApiErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            detail: Value::Null,
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(ApiErrorCode::BadRequest, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(ApiErrorCode::NotFound, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(ApiErrorCode::Internal, message)
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }

    pub fn status(&self) -> StatusCode {
        self.code.status()
    }

    /// Body deserialisation failure with the offending field path.
    pub fn body<E: std::fmt::Display>(err: serde_path_to_error::Error<E>) -> Self {
        let path = err.path().to_string();
        Self::bad_request(format!("invalid request body at `{path}`: {}", err.inner()))
            .with_detail(json!({ "path": path }))
    }
}

impl From<Error> for ApiError {
    fn from(err: Error) -> Self {
        let detail = match &err {
            Error::Schema { path, .. } => json!({ "path": path }),
            Error::Lookup { what, name } => json!({ "what": what, "name": name }),
            Error::Migration { found, expected } => json!({ "found": found, "expected": expected }),
            Error::DatasetMismatch { snapshot, current } => {
                json!({ "snapshot": snapshot, "current": current })
            }
            Error::MissingChannel(name) => json!({ "channel": name }),
            _ => Value::Null,
        };
        Self {
            code: err.kind().into(),
            message: err.to_string(),
            detail,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self)).into_response()
    }
}
