use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use fastscreen_core::{DocId, Error};
use serde::Serialize;

/// Error returned by a handler, rendered as `{"error": ..., "doc_id": ...}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
    pub doc_id: Option<DocId>,
}

#[derive(Serialize)]
struct Body<'a> {
    error: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    doc_id: Option<DocId>,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
            doc_id: None,
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, message)
    }

    pub fn unknown_session(id: &str) -> Self {
        Self::not_found(format!("unknown session {id}"))
    }
}

impl From<Error> for ApiError {
    fn from(err: Error) -> Self {
        let status = match &err {
            Error::MissingColumn(_) | Error::Csv(_) => StatusCode::UNPROCESSABLE_ENTITY,
            Error::UnknownDocument(_) | Error::Config(_) | Error::Input(_) | Error::Validation(_) => {
                StatusCode::BAD_REQUEST
            }
            Error::State(_) => StatusCode::CONFLICT,
            Error::Io { .. } | Error::Journal(_) | Error::Training(_) | Error::Usage(_) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        let doc_id = match &err {
            Error::UnknownDocument(id) => Some(*id),
            _ => None,
        };
        ApiError {
            status,
            message: err.to_string(),
            doc_id,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            tracing::error!(status = %self.status, "{}", self.message);
        }
        let body = Body {
            error: &self.message,
            doc_id: self.doc_id,
        };
        (self.status, Json(body)).into_response()
    }
}
