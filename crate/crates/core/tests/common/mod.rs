#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;

use async_trait::async_trait;
use mediaclaw::media::{AudioSegment, SynthMedia};
use mediaclaw::providers::mock::{mock_generate, MOCK_FPS, MOCK_HEIGHT, MOCK_WIDTH};
use mediaclaw::providers::{CapabilityHandler, HandlerCall, HandlerMap, ProviderError};
use mediaclaw::registry::CapabilityId;
use mediaclaw::routing::{ProviderSpec, ProviderStyle, RoutingConfig};
use mediaclaw::MediaClaw;
use serde_json::{Map, Value};
use tempfile::TempDir;

pub fn app() -> (TempDir, Arc<MediaClaw>) {
    let dir = tempfile::tempdir().unwrap();
    let app = MediaClaw::open(dir.path()).unwrap();
    (dir, Arc::new(app))
}

pub fn app_with(config: RoutingConfig) -> (TempDir, Arc<MediaClaw>) {
    let dir = tempfile::tempdir().unwrap();
    let app = MediaClaw::open_with(dir.path(), config).unwrap();
    (dir, Arc::new(app))
}

pub fn obj(value: Value) -> Map<String, Value> {
    match value {
        Value::Object(map) => map,
        other => panic!("expected object, got {other}"),
    }
}

/// Mock behavior, except the first `failures` calls whose `text` param
/// equals `target` fail with a retryable handler failure.
pub struct FlakyAvatar {
    pub target: String,
    pub failures: u32,
    pub calls: AtomicU32,
}

#[async_trait]
impl CapabilityHandler for FlakyAvatar {
    async fn handle(&self, call: &HandlerCall) -> Result<SynthMedia, ProviderError> {
        if call.opt_str("text") == Some(self.target.as_str())
            && self.calls.fetch_add(1, Ordering::SeqCst) < self.failures
        {
            return Err(ProviderError::Failure("injected avatar fault".into()));
        }
        mock_generate(call)
    }
}

/// Registers `flaky` for digital_avatar and makes it that capability's
/// default.
pub fn install_flaky_avatar(app: &MediaClaw, target: &str, failures: u32) -> Arc<FlakyAvatar> {
    let handler = Arc::new(FlakyAvatar {
        target: target.into(),
        failures,
        calls: AtomicU32::new(0),
    });
    let spec = ProviderSpec {
        name: "flaky".into(),
        style: ProviderStyle::Mock,
        base_url: None,
        supported: BTreeMap::from([(CapabilityId::DigitalAvatar, vec!["flaky-avatar".to_string()])]),
        default_model: BTreeMap::from([(CapabilityId::DigitalAvatar, "flaky-avatar".to_string())]),
    };
    let mut handlers = HandlerMap::new();
    handlers.insert(
        CapabilityId::DigitalAvatar,
        handler.clone() as Arc<dyn CapabilityHandler>,
    );
    app.registry().register_provider_binding(spec, handlers).unwrap();
    let mut config = (*app.routing().snapshot()).clone();
    config
        .capability_defaults
        .insert(CapabilityId::DigitalAvatar, "flaky".into());
    config.version += 1;
    app.routing().apply(config).unwrap();
    handler
}

/// Six-segment source: two fillers, one long silence, one repeated take.
pub fn video_use_source() -> SynthMedia {
    let mut video = SynthMedia::video_with(MOCK_WIDTH, MOCK_HEIGHT, MOCK_FPS, 4000, |k| {
        [(k * 10) as u8, 90, 200 - (k * 5) as u8]
    });
    video.audio = vec![
        AudioSegment::speech(0, 600, "Welcome to the show.", -18.0),
        AudioSegment::speech(600, 1000, "um", -24.0),
        AudioSegment::silence(1000, 2000, -60.0),
        AudioSegment::speech(2000, 2800, "Today we test editing.", -22.0),
        AudioSegment::speech(2800, 3000, "uh", -25.0),
        AudioSegment::speech(3000, 3800, "Today we test editing.", -16.5),
    ];
    video.validate().unwrap();
    video
}

pub const FIVE_SENTENCES: &str = "Good evening and welcome to the news. \
    Breaking news from the harbor tonight! \
    Prices rose again this week. \
    Is the weather turning? \
    Thank you for watching.";

/// Mock behavior after a fixed delay; used to keep runs in flight.
pub struct SlowMock(pub std::time::Duration);

#[async_trait]
impl CapabilityHandler for SlowMock {
    async fn handle(&self, call: &HandlerCall) -> Result<SynthMedia, ProviderError> {
        tokio::time::sleep(self.0).await;
        mock_generate(call)
    }
}

/// Registers `slow`, serving everything the mock serves, as global default.
pub fn install_slow_provider(app: &MediaClaw, delay: std::time::Duration) {
    let mut spec = mediaclaw::routing::mock_provider_spec();
    spec.name = "slow".into();
    let handler: Arc<dyn CapabilityHandler> = Arc::new(SlowMock(delay));
    let handlers: HandlerMap = spec.supported.keys().map(|c| (*c, handler.clone())).collect();
    app.registry().register_provider_binding(spec, handlers).unwrap();
    let mut config = (*app.routing().snapshot()).clone();
    config.global_default = Some("slow".into());
    config.version += 1;
    app.routing().apply(config).unwrap();
}

/// One parsed server-sent event.
#[derive(Debug, Clone, PartialEq)]
pub struct SseEvent {
    pub id: Option<String>,
    pub data: String,
}

/// Reads up to `limit` events from an SSE response, then drops it.
pub async fn read_sse(mut response: reqwest::Response, limit: usize) -> Vec<SseEvent> {
    let mut buffer = String::new();
    let mut events = Vec::new();
    while events.len() < limit {
        let Some(chunk) = response.chunk().await.unwrap() else {
            break;
        };
        buffer.push_str(std::str::from_utf8(&chunk).unwrap());
        while let Some(end) = buffer.find("\n\n") {
            let block: String = buffer.drain(..end + 2).collect();
            let mut id = None;
            let mut data = Vec::new();
            for line in block.lines() {
                if let Some(v) = line.strip_prefix("id:") {
                    id = Some(v.trim_start().to_string());
                } else if let Some(v) = line.strip_prefix("data:") {
                    data.push(v.strip_prefix(' ').unwrap_or(v).to_string());
                }
            }
            if !data.is_empty() {
                events.push(SseEvent {
                    id,
                    data: data.join("\n"),
                });
                if events.len() == limit {
                    break;
                }
            }
        }
    }
    events
}

pub async fn get_json<T: serde::de::DeserializeOwned>(client: &reqwest::Client, url: &str) -> T {
    let text = client.get(url).send().await.unwrap().text().await.unwrap();
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("GET {url}: {e}: {text}"))
}

pub async fn post_json<T: serde::de::DeserializeOwned>(client: &reqwest::Client, url: &str, body: &Value) -> T {
    let text = client
        .post(url)
        .header("content-type", "application/json")
        .body(body.to_string())
        .send()
        .await
        .unwrap()
        .text()
        .await
        .unwrap();
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("POST {url}: {e}: {text}"))
}
