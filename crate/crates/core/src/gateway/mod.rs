//! HTTP surface under `/v1`, the CLI, and the error contract both share.
//!
//! Tool and skill actions use a `name:verb` path segment, for example
//! `POST /v1/capabilities/mediaclaw_text_to_image:invoke`. Run events
//! stream as server-sent events whose `id` is the event seq; a client
//! resumes with `Last-Event-ID` or `?from_seq=`.

pub mod cli;
mod error;

pub use error::{status_for, ApiError, ERROR_CODES};

use std::convert::Infallible;
use std::future::Future;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use futures::{Stream, StreamExt};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

use crate::app::MediaClaw;
use crate::media::ArtifactId;
use crate::registry::InvokeRequest;
use crate::routing::RoutingConfig;

/// How long shutdown waits for in-flight runs before failing them.
pub const SHUTDOWN_GRACE: Duration = Duration::from_secs(5);

/// Body of `POST /v1/capabilities/{tool}:invoke`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvokeBody {
    #[serde(default)]
    pub params: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provider: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
}

/// Body of `POST /v1/skills/{name}:run`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBody {
    #[serde(default)]
    pub params: Map<String, Value>,
}

#[derive(Debug, Deserialize)]
struct EventsQuery {
    from_seq: Option<u64>,
}

type AppState = Arc<MediaClaw>;

pub fn router(app: Arc<MediaClaw>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/v1/capabilities", get(list_capabilities))
        .route("/v1/capabilities/{action}", post(invoke))
        .route("/v1/skills", get(list_skills))
        .route("/v1/skills/{action}", post(run_skill))
        .route("/v1/runs", get(list_runs))
        .route("/v1/runs/{id}", get(get_run))
        .route("/v1/runs/{id}/events", get(run_events))
        .route("/v1/artifacts/{id}", get(get_artifact))
        .route("/v1/artifacts/{id}/content", get(get_artifact_content))
        .route("/v1/routing", get(get_routing).put(put_routing))
        .fallback(|| async { ApiError::new("UNKNOWN_ROUTE", "no such endpoint") })
        .with_state(app)
}

/// Serves until `shutdown` resolves, then drains in-flight runs.
pub async fn serve(
    app: Arc<MediaClaw>,
    listener: TcpListener,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let engine = app.engine().clone();
    let drain = async move {
        shutdown.await;
        let stopped = engine.shutdown(SHUTDOWN_GRACE).await;
        tracing::info!(stopped, "gateway shutting down");
    };
    axum::serve(listener, router(app)).with_graceful_shutdown(drain).await
}

/// A gateway on a background task; stops when dropped.
pub struct GatewayServer {
    addr: SocketAddr,
    task: JoinHandle<std::io::Result<()>>,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
}

impl GatewayServer {
    pub async fn start(app: Arc<MediaClaw>, addr: SocketAddr) -> std::io::Result<Self> {
        let listener = TcpListener::bind(addr).await?;
        let addr = listener.local_addr()?;
        let (stop, stopped) = tokio::sync::oneshot::channel();
        let task = tokio::spawn(serve(app, listener, async move {
            let _ = stopped.await;
        }));
        Ok(GatewayServer {
            addr,
            task,
            stop: Some(stop),
        })
    }

    /// Binds an ephemeral loopback port.
    pub async fn start_local(app: Arc<MediaClaw>) -> std::io::Result<Self> {
        Self::start(app, SocketAddr::from(([127, 0, 0, 1], 0))).await
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Graceful stop: in-flight runs are drained or failed with RESTART.
    pub async fn stop(mut self) -> std::io::Result<()> {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        match (&mut self.task).await {
            Ok(result) => result,
            Err(e) => Err(std::io::Error::other(e)),
        }
    }
}

impl Drop for GatewayServer {
    fn drop(&mut self) {
        self.task.abort();
    }
}

fn canonical_response<T: Serialize>(status: StatusCode, body: &T) -> Response {
    match crate::canonical::to_string(body) {
        Ok(text) => (status, [(header::CONTENT_TYPE, "application/json")], text).into_response(),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

/// Canonical-JSON `200 OK`.
struct Canonical<T>(T);

impl<T: Serialize> IntoResponse for Canonical<T> {
    fn into_response(self) -> Response {
        canonical_response(StatusCode::OK, &self.0)
    }
}

type ApiResult<T> = Result<Canonical<T>, ApiError>;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    if body.is_empty() {
        return serde_json::from_str("{}").map_err(|e| ApiError::bad_request(e.to_string()));
    }
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("request body: {e}")))
}

/// Splits `name:verb`, insisting on `verb`.
fn action<'a>(segment: &'a str, verb: &str) -> Result<&'a str, ApiError> {
    match segment.rsplit_once(':') {
        Some((name, v)) if v == verb && !name.is_empty() => Ok(name),
        _ => Err(ApiError::new(
            "UNKNOWN_ROUTE",
            format!("expected {{name}}:{verb}, got {segment:?}"),
        )),
    }
}

async fn healthz(State(app): State<AppState>) -> Canonical<Value> {
    Canonical(json!({ "status": "ok", "config_version": app.routing().version() }))
}

async fn list_capabilities(State(app): State<AppState>) -> ApiResult<Value> {
    Ok(Canonical(json!(app.registry().list_capabilities())))
}

async fn invoke(State(app): State<AppState>, Path(segment): Path<String>, body: Bytes) -> ApiResult<Value> {
    let tool = action(&segment, "invoke")?;
    let body: InvokeBody = parse_body(&body)?;
    let request = build_request(&app, tool, body)?;
    let result = app.registry().invoke(&request).await?;
    Ok(Canonical(json!(result)))
}

/// The single request constructor shared by HTTP and CLI.
pub fn build_request(app: &MediaClaw, tool: &str, body: InvokeBody) -> Result<InvokeRequest, ApiError> {
    let mut request = InvokeRequest::new(app.registry().tool(tool)?);
    request.params = body.params;
    request.provider_hint = body.provider;
    request.model_hint = body.model;
    Ok(request)
}

async fn list_skills(State(app): State<AppState>) -> ApiResult<Value> {
    Ok(Canonical(json!(app.engine().skills())))
}

async fn run_skill(State(app): State<AppState>, Path(segment): Path<String>, body: Bytes) -> ApiResult<Value> {
    let name = action(&segment, "run")?;
    let body: RunBody = parse_body(&body)?;
    let run_id = app.engine().run_skill(name, &body.params)?;
    Ok(Canonical(json!({ "run_id": run_id })))
}

async fn list_runs(State(app): State<AppState>) -> ApiResult<Value> {
    Ok(Canonical(json!(app.engine().list_runs())))
}

async fn get_run(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Value> {
    Ok(Canonical(json!(app.engine().get_run(&id)?)))
}

async fn run_events(
    State(app): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<EventsQuery>, QueryRejection>,
    headers: HeaderMap,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let Query(query) = query.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let from_seq = match headers.get("last-event-id") {
        Some(v) => {
            let last: u64 = v
                .to_str()
                .ok()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| ApiError::bad_request("Last-Event-ID must be an event seq"))?;
            last + 1
        }
        None => query.from_seq.unwrap_or(0),
    };
    let events = app.engine().stream_events(&id, from_seq)?.map(|event| {
        let data = crate::canonical::to_string(&event).expect("event serialization is infallible");
        Ok(Event::default().id(event.seq.to_string()).data(data))
    });
    Ok(Sse::new(events).keep_alive(KeepAlive::default()))
}

async fn get_artifact(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Value> {
    let artifact = app.store().get(&ArtifactId::from(id.as_str()))?;
    Ok(Canonical(json!(*artifact)))
}

async fn get_artifact_content(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Value> {
    let artifact = app.store().get(&ArtifactId::from(id.as_str()))?;
    Ok(Canonical(json!(artifact.payload)))
}

async fn get_routing(State(app): State<AppState>) -> ApiResult<Value> {
    Ok(Canonical(json!(*app.routing().snapshot())))
}

async fn put_routing(State(app): State<AppState>, body: Bytes) -> ApiResult<Value> {
    let text = std::str::from_utf8(&body).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let config = RoutingConfig::from_json(text)?;
    let version = app.routing().apply(config)?;
    Ok(Canonical(json!({ "config_version": version })))
}
