use std::fmt;

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::ErrorCode;

/// Every code the gateway can return, with its HTTP status. Module errors
/// map onto this set one to one.
pub const ERROR_CODES: &[(&str, u16)] = &[
    // media
    ("INVALID_MANIFEST", 400),
    ("NOT_FOUND", 404),
    ("OUT_OF_RANGE", 400),
    ("WRONG_KIND", 400),
    ("IO_ERROR", 500),
    ("CORRUPT_ARTIFACT", 500),
    // registry
    ("UNKNOWN_TOOL", 404),
    ("SCHEMA_VIOLATION", 400),
    ("HINT_REJECTED_FOR_LOCAL_TOOL", 400),
    ("DUPLICATE_PROVIDER", 409),
    ("MISSING_HANDLER", 500),
    // routing
    ("UNKNOWN_PROVIDER", 400),
    ("UNSUPPORTED_CAPABILITY", 400),
    ("UNKNOWN_MODEL", 400),
    ("NO_ROUTE", 422),
    ("NOT_ROUTED", 400),
    ("VALIDATION_FAILED", 422),
    ("STALE_VERSION", 409),
    ("MALFORMED_CONFIG", 400),
    ("PERSIST_FAILED", 500),
    // providers and local tools
    ("BAD_PARAMS", 400),
    ("HANDLER_FAILURE", 502),
    ("TRANSPORT_ERROR", 502),
    ("REMOTE_ERROR", 502),
    ("INVALID_REMOTE_MANIFEST", 502),
    ("ASS_PARSE_ERROR", 400),
    ("OVERLAPPING_EVENTS", 400),
    ("UNREPRESENTABLE_TIME", 400),
    ("INVALID_EVENT", 400),
    // engine
    ("UNKNOWN_SKILL", 404),
    ("DUPLICATE_SKILL", 409),
    ("INVALID_SKILL", 400),
    ("PARAM_VIOLATION", 400),
    ("UNKNOWN_RUN", 404),
    // run-level codes, reported inside run records
    ("RESTART", 500),
    ("STEP_PANICKED", 500),
    ("BAD_INPUT", 500),
    ("MISSING_INPUT", 500),
    ("MISSING_PRODUCT_NAME", 422),
    ("BAD_SHOT_COUNT", 422),
    ("EMPTY_SCRIPT", 422),
    ("NO_AUDIO", 422),
    ("MIXED_DIMENSIONS", 422),
    ("OFF_GRID", 422),
    ("EMPTY_AFTER_EDIT", 422),
    ("RANGE_OUT_OF_BOUNDS", 422),
    ("EMPTY_INPUT", 422),
    ("BAD_RULES", 422),
    ("BAD_MODEL_OUTPUT", 502),
    // gateway
    ("BAD_REQUEST", 400),
    ("UNKNOWN_ROUTE", 404),
];

/// Status for `code`; codes outside [`ERROR_CODES`] are internal errors.
pub fn status_for(code: &str) -> StatusCode {
    ERROR_CODES
        .iter()
        .find(|(c, _)| *c == code)
        .and_then(|(_, s)| StatusCode::from_u16(*s).ok())
        .unwrap_or(StatusCode::INTERNAL_SERVER_ERROR)
}

/// Error body returned by every endpoint and printed by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
    #[serde(default)]
    pub details: Map<String, Value>,
}

impl ApiError {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        ApiError {
            code: code.into(),
            message: message.into(),
            details: Map::new(),
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new("BAD_REQUEST", message)
    }

    pub fn status(&self) -> StatusCode {
        status_for(&self.code)
    }

    pub fn to_canonical_json(&self) -> String {
        crate::canonical::to_string(self).expect("error serialization is infallible")
    }
}

impl<E: ErrorCode> From<E> for ApiError {
    fn from(e: E) -> Self {
        ApiError {
            code: e.code().into(),
            message: e.to_string(),
            details: e.details(),
        }
    }
}

impl fmt::Display for ApiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for ApiError {}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        super::canonical_response(self.status(), &self)
    }
}
