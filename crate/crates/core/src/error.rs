//! Stable machine codes shared by every module error, and the retry classes
//! the skill engine keys on.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::media::MediaError;
use crate::providers::ass::AssError;
use crate::providers::local::LocalToolError;
use crate::providers::ProviderError;
use crate::routing::RoutingError;
use crate::schema::SchemaViolation;

/// Error families a retry policy may opt into. Everything else is final.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RetryClass {
    TransportError,
    RemoteError,
    HandlerFailure,
}

impl RetryClass {
    pub const ALL: [RetryClass; 3] = [
        RetryClass::TransportError,
        RetryClass::RemoteError,
        RetryClass::HandlerFailure,
    ];
}

/// A module error with a stable code.
pub trait ErrorCode: fmt::Display {
    fn code(&self) -> &'static str;

    fn retry_class(&self) -> Option<RetryClass> {
        None
    }

    /// Structured context for API consumers; empty unless overridden.
    fn details(&self) -> Map<String, Value> {
        Map::new()
    }
}

fn details_of(value: Value) -> Map<String, Value> {
    match value {
        Value::Object(map) => map,
        _ => Map::new(),
    }
}

impl ErrorCode for MediaError {
    fn code(&self) -> &'static str {
        match self {
            MediaError::InvalidManifest(_) => "INVALID_MANIFEST",
            MediaError::NotFound(_) => "NOT_FOUND",
            MediaError::OutOfRange { .. } => "OUT_OF_RANGE",
            MediaError::WrongKind { .. } => "WRONG_KIND",
            MediaError::Io(_) => "IO_ERROR",
            MediaError::Corrupt(_) => "CORRUPT_ARTIFACT",
        }
    }
}

impl ErrorCode for RoutingError {
    fn code(&self) -> &'static str {
        match self {
            RoutingError::UnknownProvider(_) => "UNKNOWN_PROVIDER",
            RoutingError::UnsupportedCapability { .. } => "UNSUPPORTED_CAPABILITY",
            RoutingError::UnknownModel { .. } => "UNKNOWN_MODEL",
            RoutingError::NoRoute { .. } => "NO_ROUTE",
            RoutingError::NotRouted(_) => "NOT_ROUTED",
            RoutingError::ValidationFailed(_) => "VALIDATION_FAILED",
            RoutingError::StaleVersion { .. } => "STALE_VERSION",
            RoutingError::Malformed(_) => "MALFORMED_CONFIG",
            RoutingError::Persist(_) => "PERSIST_FAILED",
        }
    }

    fn details(&self) -> Map<String, Value> {
        match self {
            RoutingError::ValidationFailed(violations) => details_of(json!({ "violations": violations })),
            RoutingError::StaleVersion { current, offered } => {
                details_of(json!({ "current": current, "offered": offered }))
            }
            _ => Map::new(),
        }
    }
}

impl ErrorCode for ProviderError {
    fn code(&self) -> &'static str {
        match self {
            ProviderError::BadParams(_) => "BAD_PARAMS",
            ProviderError::Failure(_) => "HANDLER_FAILURE",
            ProviderError::Transport(_) => "TRANSPORT_ERROR",
            ProviderError::Remote { .. } => "REMOTE_ERROR",
            ProviderError::InvalidRemoteManifest(_) => "INVALID_REMOTE_MANIFEST",
        }
    }

    fn retry_class(&self) -> Option<RetryClass> {
        match self {
            ProviderError::Failure(_) => Some(RetryClass::HandlerFailure),
            ProviderError::Transport(_) => Some(RetryClass::TransportError),
            ProviderError::Remote { .. } => Some(RetryClass::RemoteError),
            ProviderError::BadParams(_) | ProviderError::InvalidRemoteManifest(_) => None,
        }
    }

    fn details(&self) -> Map<String, Value> {
        match self {
            ProviderError::Remote { status, .. } => details_of(json!({ "status": status })),
            _ => Map::new(),
        }
    }
}

impl ErrorCode for AssError {
    fn code(&self) -> &'static str {
        match self {
            AssError::Parse { .. } => "ASS_PARSE_ERROR",
            AssError::OverlappingEvents { .. } => "OVERLAPPING_EVENTS",
            AssError::Unrepresentable { .. } => "UNREPRESENTABLE_TIME",
        }
    }
}

impl ErrorCode for LocalToolError {
    fn code(&self) -> &'static str {
        match self {
            LocalToolError::WrongKind(e) => e.code(),
            LocalToolError::OverlappingEvents(..) => "OVERLAPPING_EVENTS",
            LocalToolError::InvalidEvent(..) => "INVALID_EVENT",
            LocalToolError::Ass(e) => e.code(),
        }
    }
}

impl ErrorCode for SchemaViolation {
    fn code(&self) -> &'static str {
        "SCHEMA_VIOLATION"
    }

    fn details(&self) -> Map<String, Value> {
        details_of(json!({ "param": self.param, "reason": self.reason }))
    }
}
