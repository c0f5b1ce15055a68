use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use sensorsift_core::Error as CoreError;
use sensorsift_distributed::DistError;
use serde::{Deserialize, Serialize};

/// Error document returned with every non-2xx status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub kind: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expected: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, kind: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                kind: kind.to_string(),
                message: message.into(),
                line: None,
                column: None,
                expected: Vec::new(),
            },
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_request", message)
    }

    pub fn no_corpus() -> Self {
        Self::new(StatusCode::CONFLICT, "no_corpus", "no corpus is loaded")
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }

    pub fn is_user_error(&self) -> bool {
        self.status.is_client_error()
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.body.kind, self.body.message)
    }
}

impl std::error::Error for ApiError {}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        let message = e.to_string();
        match e {
            CoreError::Parse(p) => ApiError {
                status: StatusCode::BAD_REQUEST,
                body: ErrorBody {
                    kind: "parse_error".into(),
                    message,
                    line: Some(p.line),
                    column: Some(p.column),
                    expected: p.expected,
                },
            },
            CoreError::UnknownProperty(_) => Self::new(StatusCode::BAD_REQUEST, "unknown_property", message),
            CoreError::Load { .. } => Self::new(StatusCode::BAD_REQUEST, "load_error", message),
            CoreError::Io(_) => Self::new(StatusCode::BAD_REQUEST, "io_error", message),
            CoreError::MissingProperty { .. } => Self::internal(message),
            _ => Self::invalid(message),
        }
    }
}

impl From<DistError> for ApiError {
    fn from(e: DistError) -> Self {
        match e {
            DistError::Core(e) => e.into(),
            DistError::InvalidK { .. } => Self::new(StatusCode::BAD_REQUEST, "invalid_k", e.to_string()),
            DistError::InvalidTopology(_) => Self::new(StatusCode::BAD_REQUEST, "invalid_topology", e.to_string()),
            DistError::SimFault { .. } => Self::new(StatusCode::BAD_REQUEST, "sim_fault", e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}
