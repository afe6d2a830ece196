use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

use tilexplore_core::ingestion::DroppedRow;
use tilexplore_core::selection::AttributeReport;
use tilexplore_core::Error;

/// JSON error body: `{"error": kind, "message": ..., "report"?: ..., "diagnostics"?: [...]}`.
#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub error: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<AttributeReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<DroppedRow>,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody { error: kind, message: message.into(), report: None, diagnostics: Vec::new() },
        }
    }

    pub fn not_found(id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("no session `{id}`"))
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn unprocessable(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_request", message)
    }

    /// Errors raised while building a session from its data source.
    pub fn ingestion(e: Error) -> Self {
        let mut err = ApiError::new(StatusCode::BAD_REQUEST, "ingestion", e.to_string());
        match e {
            Error::RowsRejected { rows } => err.body.diagnostics = rows,
            Error::Csv(c) => {
                if let Some(pos) = c.position() {
                    err.body.diagnostics = vec![DroppedRow { line: pos.line() as usize, reason: c.to_string() }];
                }
            }
            _ => {}
        }
        err
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        let (status, kind) = match &e {
            Error::NoHypothesis => (StatusCode::CONFLICT, "no_hypothesis"),
            Error::EmptyTile { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "empty_tile"),
            Error::SelectionTooSmall(_) => (StatusCode::UNPROCESSABLE_ENTITY, "selection_too_small"),
            Error::InvalidHypothesis(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_hypothesis"),
            Error::InvalidSelection(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_selection"),
            Error::UnknownColumn(_) => (StatusCode::UNPROCESSABLE_ENTITY, "unknown_column"),
            Error::InvalidTile(_) | Error::InvalidShape(_) | Error::ShapeMismatch { .. } => {
                (StatusCode::UNPROCESSABLE_ENTITY, "invalid_tile")
            }
            Error::InvalidParameter(_) | Error::TooLarge { .. } => {
                (StatusCode::UNPROCESSABLE_ENTITY, "invalid_parameter")
            }
            Error::DegenerateCovariance(_) | Error::DegenerateDirection(_) => {
                (StatusCode::UNPROCESSABLE_ENTITY, "degenerate")
            }
            Error::MalformedEvent { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "malformed_event"),
            Error::Ingestion(_) | Error::RowsRejected { .. } | Error::Csv(_) => return ApiError::ingestion(e),
            Error::Json(_) => (StatusCode::BAD_REQUEST, "bad_request"),
            Error::Io(_) => (StatusCode::INTERNAL_SERVER_ERROR, "io"),
        };
        let mut err = ApiError::new(status, kind, message);
        if let Error::EmptyTile { report, .. } = e {
            err.body.report = Some(*report);
        }
        err
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        let kind = if r.status() == StatusCode::UNPROCESSABLE_ENTITY { "invalid_request" } else { "bad_request" };
        ApiError::new(r.status(), kind, r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_request", r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
