//! Capability handlers: the deterministic mock provider family, the HTTP
//! adapter and its in-repo stub server, and the two local tools.

pub mod ass;
pub mod http;
pub mod local;
pub mod mock;
pub mod stub;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use async_trait::async_trait;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::media::{ArtifactId, SynthMedia};
use crate::registry::CapabilityId;
use crate::schema::ParamType;

/// Everything a handler sees for one invocation: validated params with
/// defaults filled, and the payload of every referenced artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct HandlerCall {
    pub capability: CapabilityId,
    /// Model chosen by routing; empty for local tools.
    pub model: String,
    pub params: BTreeMap<String, Value>,
    pub artifacts: BTreeMap<ArtifactId, SynthMedia>,
}

impl HandlerCall {
    pub fn new(capability: CapabilityId, params: BTreeMap<String, Value>) -> Self {
        HandlerCall {
            capability,
            model: String::new(),
            params,
            artifacts: BTreeMap::new(),
        }
    }

    pub fn with_artifact(mut self, id: ArtifactId, payload: SynthMedia) -> Self {
        self.artifacts.insert(id, payload);
        self
    }

    pub fn str(&self, name: &str) -> Result<&str, ProviderError> {
        self.params
            .get(name)
            .and_then(Value::as_str)
            .ok_or_else(|| ProviderError::BadParams(format!("missing string parameter {name:?}")))
    }

    pub fn opt_str(&self, name: &str) -> Option<&str> {
        self.params.get(name).and_then(Value::as_str)
    }

    pub fn uint(&self, name: &str) -> Result<u64, ProviderError> {
        self.params
            .get(name)
            .and_then(Value::as_u64)
            .ok_or_else(|| ProviderError::BadParams(format!("missing integer parameter {name:?}")))
    }

    pub fn artifact(&self, name: &str) -> Result<(&ArtifactId, &SynthMedia), ProviderError> {
        let id = self.str(name)?;
        self.artifacts
            .get_key_value(&ArtifactId::from(id))
            .ok_or_else(|| ProviderError::BadParams(format!("artifact {id} for {name:?} not supplied")))
    }

    pub fn artifact_list(&self, name: &str) -> Result<Vec<(&ArtifactId, &SynthMedia)>, ProviderError> {
        let ids = self
            .params
            .get(name)
            .and_then(Value::as_array)
            .ok_or_else(|| ProviderError::BadParams(format!("missing artifact list {name:?}")))?;
        ids.iter()
            .map(|v| {
                let id = v.as_str().unwrap_or_default();
                self.artifacts
                    .get_key_value(&ArtifactId::from(id))
                    .ok_or_else(|| ProviderError::BadParams(format!("artifact {id} for {name:?} not supplied")))
            })
            .collect()
    }

    /// Wire body for HTTP providers: artifact references are replaced by
    /// `{"artifact_id": .., "manifest": ..}` objects.
    pub fn to_wire(&self) -> Value {
        let schema = self.capability.descriptor().param_schema;
        let inline = |id: &Value| -> Value {
            let key = ArtifactId::from(id.as_str().unwrap_or_default());
            json!({
                "artifact_id": key.as_str(),
                "manifest": self.artifacts.get(&key).map(|m| serde_json::to_value(m).unwrap_or(Value::Null)),
            })
        };
        let mut params = Map::new();
        for (name, value) in &self.params {
            let ty = schema.iter().find(|s| &s.name == name).map(|s| s.ty);
            let wired = match ty {
                Some(ParamType::Artifact(_)) => inline(value),
                Some(ParamType::ArtifactList(_)) => {
                    Value::Array(value.as_array().into_iter().flatten().map(inline).collect())
                }
                _ => value.clone(),
            };
            params.insert(name.clone(), wired);
        }
        json!({
            "capability": self.capability,
            "model": self.model,
            "params": params,
        })
    }

    /// Inverse of [`HandlerCall::to_wire`].
    pub fn from_wire(body: &Value) -> Result<Self, ProviderError> {
        let bad = |m: &str| ProviderError::BadParams(m.to_string());
        let capability: CapabilityId = serde_json::from_value(body["capability"].clone())
            .map_err(|e| ProviderError::BadParams(format!("capability: {e}")))?;
        let model = body["model"].as_str().unwrap_or_default().to_string();
        let wire_params = body["params"]
            .as_object()
            .ok_or_else(|| bad("params must be an object"))?;
        let schema = capability.descriptor().param_schema;

        let mut artifacts = BTreeMap::new();
        let mut take = |v: &Value| -> Result<Value, ProviderError> {
            let id = v["artifact_id"]
                .as_str()
                .ok_or_else(|| bad("inlined artifact without artifact_id"))?;
            let manifest: SynthMedia = serde_json::from_value(v["manifest"].clone())
                .map_err(|e| ProviderError::BadParams(format!("inlined manifest for {id}: {e}")))?;
            artifacts.insert(ArtifactId::from(id), manifest);
            Ok(Value::String(id.to_string()))
        };
        let mut params = BTreeMap::new();
        for (name, value) in wire_params {
            let ty = schema.iter().find(|s| &s.name == name).map(|s| s.ty);
            let plain = match ty {
                Some(ParamType::Artifact(_)) => take(value)?,
                Some(ParamType::ArtifactList(_)) => Value::Array(
                    value
                        .as_array()
                        .ok_or_else(|| bad("artifact list must be an array"))?
                        .iter()
                        .map(&mut take)
                        .collect::<Result<_, _>>()?,
                ),
                _ => value.clone(),
            };
            params.insert(name.clone(), plain);
        }
        Ok(HandlerCall {
            capability,
            model,
            params,
            artifacts,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("handler failure: {0}")]
    Failure(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("remote error {status}: {body}")]
    Remote { status: u16, body: String },
    #[error("invalid remote manifest: {0}")]
    InvalidRemoteManifest(String),
}

/// A capability implementation behind the unified tool interface.
#[async_trait]
pub trait CapabilityHandler: Send + Sync {
    async fn handle(&self, call: &HandlerCall) -> Result<SynthMedia, ProviderError>;
}

pub type HandlerMap = HashMap<CapabilityId, Arc<dyn CapabilityHandler>>;
