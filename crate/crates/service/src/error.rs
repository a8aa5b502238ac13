use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;

use crate::view::OverlayFailure;
use pednet_core::overlay::OverlayError;
use pednet_core::{GenotypeError, LineId};

/// JSON error body `{"error": {"code": ..., "message": ...}}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn unknown_line(id: &LineId) -> Self {
        Self::new(StatusCode::NOT_FOUND, "UnknownLine", format!("unknown line `{id}`"))
    }

    pub fn no_genotypes() -> Self {
        Self::new(StatusCode::CONFLICT, "NoGenotypes", "the loaded bundle has no genotypes")
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": {"code": self.code, "message": self.message}});
        (self.status, Json(body)).into_response()
    }
}

impl From<GenotypeError> for ApiError {
    fn from(e: GenotypeError) -> Self {
        match e {
            GenotypeError::UnknownLine(id) => {
                ApiError::new(StatusCode::NOT_FOUND, "UnknownLine", format!("line `{id}` is not genotyped"))
            }
            GenotypeError::LengthMismatch { .. } => ApiError::bad_request("LengthMismatch", e.to_string()),
            GenotypeError::DuplicateLine(_) => ApiError::bad_request("DuplicateLine", e.to_string()),
        }
    }
}

impl From<OverlayError> for ApiError {
    fn from(e: OverlayError) -> Self {
        match e {
            OverlayError::UnknownTrait(_) => ApiError::new(StatusCode::NOT_FOUND, "UnknownTrait", e.to_string()),
            _ => ApiError::bad_request("InvalidOverlay", e.to_string()),
        }
    }
}

impl From<OverlayFailure> for ApiError {
    fn from(f: OverlayFailure) -> Self {
        match f {
            OverlayFailure::Overlay(e) => e.into(),
            OverlayFailure::NoGenotypes => ApiError::no_genotypes(),
            OverlayFailure::Genotype(e) => e.into(),
            OverlayFailure::InvalidCutoff(c) => {
                ApiError::bad_request("InvalidCutoff", format!("cutoff {c} is outside [0, 1]"))
            }
        }
    }
}
