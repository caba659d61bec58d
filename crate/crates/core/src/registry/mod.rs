//! The unified tool interface: capability catalog, provider bindings and
//! the single `invoke` entry point used by skills, the gateway and the CLI.

mod capability;

pub use capability::{CapabilityId, RoutingClass, ToolDescriptor};

use std::collections::HashMap;
use std::sync::{Arc, RwLock};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::error::{ErrorCode, RetryClass};
use crate::media::{ArtifactId, ArtifactStore, Lineage, MediaError, Producer};
use crate::providers::http::HttpProvider;
use crate::providers::local::LocalTools;
use crate::providers::mock::MockProvider;
use crate::providers::{CapabilityHandler, HandlerCall, HandlerMap, ProviderError};
use crate::routing::{ProviderSpec, ProviderStyle, RoutingError, RoutingTable};
use crate::schema::{self, SchemaViolation};

/// Provider name reported for local tools.
pub const LOCAL_PROVIDER: &str = "local";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvokeRequest {
    pub capability: CapabilityId,
    #[serde(default)]
    pub params: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provider_hint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_hint: Option<String>,
}

impl InvokeRequest {
    pub fn new(capability: CapabilityId) -> Self {
        InvokeRequest {
            capability,
            params: Map::new(),
            provider_hint: None,
            model_hint: None,
        }
    }

    pub fn param(mut self, name: &str, value: impl Into<Value>) -> Self {
        self.params.insert(name.to_string(), value.into());
        self
    }

    pub fn provider(mut self, name: impl Into<String>) -> Self {
        self.provider_hint = Some(name.into());
        self
    }

    pub fn model(mut self, name: impl Into<String>) -> Self {
        self.model_hint = Some(name.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvokeResult {
    pub artifact_id: ArtifactId,
    pub provider_used: String,
    pub model_used: String,
    pub elapsed_ms: u64,
}

#[derive(Debug, Error)]
pub enum InvokeError {
    #[error("unknown tool {0:?}")]
    UnknownTool(String),
    #[error("schema violation: {0}")]
    SchemaViolation(#[from] SchemaViolation),
    #[error("{0} is a local tool and takes no provider or model hint")]
    HintRejectedForLocalTool(CapabilityId),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error("provider {provider:?} failed: {source}")]
    Handler {
        provider: String,
        #[source]
        source: ProviderError,
    },
    #[error(transparent)]
    Media(#[from] MediaError),
    #[error("provider {0:?} is already registered")]
    DuplicateProvider(String),
    #[error("provider {provider:?} declares {capability} but supplies no handler")]
    MissingHandler { provider: String, capability: CapabilityId },
}

impl ErrorCode for InvokeError {
    fn code(&self) -> &'static str {
        match self {
            InvokeError::UnknownTool(_) => "UNKNOWN_TOOL",
            InvokeError::SchemaViolation(e) => e.code(),
            InvokeError::HintRejectedForLocalTool(_) => "HINT_REJECTED_FOR_LOCAL_TOOL",
            InvokeError::Routing(e) => e.code(),
            InvokeError::Handler { source, .. } => source.code(),
            InvokeError::Media(e) => e.code(),
            InvokeError::DuplicateProvider(_) => "DUPLICATE_PROVIDER",
            InvokeError::MissingHandler { .. } => "MISSING_HANDLER",
        }
    }

    fn retry_class(&self) -> Option<RetryClass> {
        match self {
            InvokeError::Handler { source, .. } => source.retry_class(),
            _ => None,
        }
    }

    fn details(&self) -> Map<String, Value> {
        match self {
            InvokeError::SchemaViolation(e) => e.details(),
            InvokeError::Routing(e) => e.details(),
            InvokeError::Handler { provider, source } => {
                let mut map = source.details();
                map.insert("provider".into(), provider.clone().into());
                map
            }
            _ => Map::new(),
        }
    }
}

/// One catalog row: a tool and the providers that can serve it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapabilityListing {
    #[serde(flatten)]
    pub descriptor: ToolDescriptor,
    pub providers: Vec<String>,
}

/// Capability catalog bound to a store and a live routing table.
pub struct Registry {
    store: Arc<ArtifactStore>,
    routing: Arc<RoutingTable>,
    bindings: RwLock<HashMap<String, HandlerMap>>,
    http_clients: RwLock<HashMap<String, Arc<HttpProvider>>>,
    local: LocalTools,
}

impl Registry {
    pub fn new(store: Arc<ArtifactStore>, routing: Arc<RoutingTable>) -> Self {
        Registry {
            store,
            routing,
            bindings: RwLock::new(HashMap::new()),
            http_clients: RwLock::new(HashMap::new()),
            local: LocalTools,
        }
    }

    pub fn store(&self) -> &Arc<ArtifactStore> {
        &self.store
    }

    pub fn routing(&self) -> &Arc<RoutingTable> {
        &self.routing
    }

    /// Adds a provider with explicit handlers and makes it routable.
    pub fn register_provider_binding(&self, spec: ProviderSpec, handlers: HandlerMap) -> Result<u64, InvokeError> {
        let mut bindings = self.bindings.write().expect("bindings lock poisoned");
        if bindings.contains_key(&spec.name) || self.routing.snapshot().provider(&spec.name).is_some() {
            return Err(InvokeError::DuplicateProvider(spec.name));
        }
        if let Some(capability) = spec.supported.keys().find(|c| !handlers.contains_key(c)) {
            return Err(InvokeError::MissingHandler {
                provider: spec.name.clone(),
                capability: *capability,
            });
        }
        let name = spec.name.clone();
        let version = self.routing.add_provider(spec)?;
        bindings.insert(name, handlers);
        Ok(version)
    }

    /// Catalog order, with the providers of the live config that support
    /// each routed tool.
    pub fn list_capabilities(&self) -> Vec<CapabilityListing> {
        let config = self.routing.snapshot();
        CapabilityId::ALL
            .into_iter()
            .map(|capability| {
                let providers = if capability.is_routed() {
                    config
                        .providers
                        .iter()
                        .filter(|p| p.supports(capability))
                        .map(|p| p.name.clone())
                        .collect()
                } else {
                    vec![LOCAL_PROVIDER.to_string()]
                };
                CapabilityListing {
                    descriptor: capability.descriptor(),
                    providers,
                }
            })
            .collect()
    }

    /// Looks up a tool by its public name.
    pub fn tool(&self, tool_name: &str) -> Result<CapabilityId, InvokeError> {
        CapabilityId::from_tool_name(tool_name).ok_or_else(|| InvokeError::UnknownTool(tool_name.to_string()))
    }

    fn handler_for(&self, spec: &ProviderSpec, capability: CapabilityId) -> Option<Arc<dyn CapabilityHandler>> {
        if let Some(map) = self.bindings.read().expect("bindings lock poisoned").get(&spec.name) {
            return map.get(&capability).cloned();
        }
        match spec.style {
            ProviderStyle::Mock => Some(Arc::new(MockProvider)),
            ProviderStyle::Http => {
                let url = spec.base_url.clone()?;
                if let Some(client) = self.http_clients.read().expect("http lock poisoned").get(&url) {
                    return Some(client.clone());
                }
                let client = Arc::new(HttpProvider::new(url.clone()));
                self.http_clients
                    .write()
                    .expect("http lock poisoned")
                    .insert(url, client.clone());
                Some(client)
            }
        }
    }

    /// Invokes a tool outside any skill run.
    pub async fn invoke(&self, request: &InvokeRequest) -> Result<InvokeResult, InvokeError> {
        self.invoke_as(request, Producer::DirectInvoke).await
    }

    /// Invokes a tool, recording `producer` as the output's lineage.
    pub async fn invoke_as(&self, request: &InvokeRequest, producer: Producer) -> Result<InvokeResult, InvokeError> {
        let started = Instant::now();
        let capability = request.capability;
        let descriptor = capability.descriptor();

        let mut raw = request.params.clone();
        let mut provider_hint = request.provider_hint.clone();
        let mut model_hint = request.model_hint.clone();
        if capability.is_routed() {
            lift_hint(&mut raw, "provider_hint", &mut provider_hint)?;
            lift_hint(&mut raw, "model_hint", &mut model_hint)?;
        } else if provider_hint.is_some()
            || model_hint.is_some()
            || raw.contains_key("provider_hint")
            || raw.contains_key("model_hint")
        {
            return Err(InvokeError::HintRejectedForLocalTool(capability));
        }

        let params = schema::validate(&descriptor.param_schema, &raw)?;
        let mut call = HandlerCall::new(capability, params);
        let mut inputs = Vec::new();
        for (param, id, kind) in schema::artifact_refs(&descriptor.param_schema, &call.params) {
            let artifact = self.store.get(&id)?;
            if let Some(kind) = kind {
                if artifact.kind != kind {
                    return Err(
                        SchemaViolation::new(param, format!("{id} is {}, expected {kind}", artifact.kind)).into(),
                    );
                }
            }
            if !inputs.contains(&id) {
                inputs.push(id.clone());
            }
            call.artifacts.insert(id, artifact.payload.clone());
        }
        if call.params.get("mode").and_then(Value::as_str) == Some("first_last")
            && capability == CapabilityId::MultiImageToVideo
            && call.params["images"].as_array().map_or(0, Vec::len) < 2
        {
            return Err(SchemaViolation::new("images", "first_last needs at least two images").into());
        }

        let (provider_used, handler) = if capability.is_routed() {
            let (config, binding) =
                self.routing
                    .resolve(capability, provider_hint.as_deref(), model_hint.as_deref())?;
            let spec = config
                .provider(&binding.provider)
                .ok_or_else(|| RoutingError::UnknownProvider(binding.provider.clone()))?;
            let handler = self.handler_for(spec, capability).ok_or_else(|| InvokeError::Handler {
                provider: binding.provider.clone(),
                source: ProviderError::Failure("no handler bound".into()),
            })?;
            call.model = binding.model;
            (binding.provider, handler)
        } else {
            (
                LOCAL_PROVIDER.to_string(),
                Arc::new(self.local) as Arc<dyn CapabilityHandler>,
            )
        };

        let mut output = handler.handle(&call).await.map_err(|source| InvokeError::Handler {
            provider: provider_used.clone(),
            source,
        })?;
        if output.kind != descriptor.output_kind {
            return Err(InvokeError::Handler {
                provider: provider_used,
                source: ProviderError::InvalidRemoteManifest(format!(
                    "expected {} output, got {}",
                    descriptor.output_kind, output.kind
                )),
            });
        }
        if capability.is_routed() {
            output.meta.insert("provider".into(), provider_used.clone());
            output.meta.insert("model".into(), call.model.clone());
        }
        let artifact_id = self.store.put(output, Lineage { producer, inputs })?;
        Ok(InvokeResult {
            artifact_id,
            provider_used,
            model_used: call.model,
            elapsed_ms: started.elapsed().as_millis() as u64,
        })
    }
}

/// Moves a hint passed inside `params` into its dedicated slot.
fn lift_hint(params: &mut Map<String, Value>, key: &str, slot: &mut Option<String>) -> Result<(), SchemaViolation> {
    let Some(value) = params.remove(key) else {
        return Ok(());
    };
    let hint = match value {
        Value::String(s) if !s.is_empty() => s,
        Value::Null => return Ok(()),
        _ => return Err(SchemaViolation::new(key, "expected non-empty string")),
    };
    match slot {
        Some(existing) if *existing != hint => Err(SchemaViolation::new(key, "conflicts with the request-level hint")),
        _ => {
            *slot = Some(hint);
            Ok(())
        }
    }
}
