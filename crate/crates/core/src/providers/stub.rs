//! In-repo stand-in for a self-hosted model server speaking the adapter's
//! protocol. It either mirrors the mock rules or injects a fixed fault.

use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde_json::Value;
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

use super::mock::mock_generate;
use super::HandlerCall;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StubMode {
    /// Answer with exactly what the mock provider would produce.
    #[default]
    Mirror,
    /// Answer every call with this status and a short text body.
    Status(u16),
    /// Answer 200 with a video whose frame count is wrong.
    BadManifest,
}

#[derive(Clone, Default)]
struct StubState {
    mode: Arc<RwLock<StubMode>>,
}

/// Axum router for the stub: `POST /invoke`, `GET /healthz`.
pub fn stub_router(mode: StubMode) -> Router {
    router_with(StubState {
        mode: Arc::new(RwLock::new(mode)),
    })
}

fn router_with(state: StubState) -> Router {
    Router::new()
        .route("/invoke", post(invoke))
        .route("/healthz", get(|| async { "ok" }))
        .with_state(state)
}

async fn invoke(State(state): State<StubState>, body: String) -> Response {
    let mode = *state.mode.read().unwrap_or_else(|e| e.into_inner());
    match mode {
        StubMode::Status(code) => {
            let status = StatusCode::from_u16(code).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
            (status, format!("stub configured to fail with {code}")).into_response()
        }
        StubMode::BadManifest => {
            let bad = r#"{"audio":[],"duration_ms":1000,"fps":5,"frames":[],"height":360,"kind":"video","meta":{},"text":"","width":640}"#;
            (StatusCode::OK, bad).into_response()
        }
        StubMode::Mirror => {
            let parsed: Value = match serde_json::from_str(&body) {
                Ok(v) => v,
                Err(e) => return (StatusCode::BAD_REQUEST, e.to_string()).into_response(),
            };
            let result = HandlerCall::from_wire(&parsed).and_then(|call| mock_generate(&call));
            match result {
                Ok(media) => (StatusCode::OK, media.to_canonical_json()).into_response(),
                Err(e) => (StatusCode::UNPROCESSABLE_ENTITY, e.to_string()).into_response(),
            }
        }
    }
}

/// A stub bound to a local port and served on a background task.
pub struct StubServer {
    addr: SocketAddr,
    state: StubState,
    task: JoinHandle<()>,
}

impl StubServer {
    /// Binds `addr` (use port 0 for an ephemeral port) and starts serving.
    pub async fn start(addr: SocketAddr, mode: StubMode) -> std::io::Result<Self> {
        let listener = TcpListener::bind(addr).await?;
        let addr = listener.local_addr()?;
        let state = StubState {
            mode: Arc::new(RwLock::new(mode)),
        };
        let app = router_with(state.clone());
        let task = tokio::spawn(async move {
            let _ = axum::serve(listener, app).await;
        });
        Ok(StubServer { addr, state, task })
    }

    /// Ephemeral-port stub on loopback.
    pub async fn start_local(mode: StubMode) -> std::io::Result<Self> {
        Self::start(SocketAddr::from(([127, 0, 0, 1], 0)), mode).await
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn set_mode(&self, mode: StubMode) {
        *self.state.mode.write().unwrap_or_else(|e| e.into_inner()) = mode;
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.task.abort();
    }
}
