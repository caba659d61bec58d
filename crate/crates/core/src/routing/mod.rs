//! Three-level provider routing.
//!
//! A request resolves to a provider and model by checking, in order, the
//! request's own provider hint, the per-capability default, then the global
//! default. The provider table and its support matrix live in a
//! [`RoutingConfig`]; [`RoutingTable`] holds the live config and swaps it
//! atomically on update.

mod table;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::registry::CapabilityId;

pub use table::RoutingTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderStyle {
    Mock,
    Http,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderSpec {
    pub name: String,
    pub style: ProviderStyle,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_url: Option<String>,
    /// Capability → models this provider serves for it.
    pub supported: BTreeMap<CapabilityId, Vec<String>>,
    pub default_model: BTreeMap<CapabilityId, String>,
}

impl ProviderSpec {
    pub fn supports(&self, capability: CapabilityId) -> bool {
        self.supported.get(&capability).is_some_and(|m| !m.is_empty())
    }

    /// `model_hint` if it is served, otherwise the provider's default model.
    fn pick_model(&self, capability: CapabilityId, model_hint: Option<&str>) -> Result<String, RoutingError> {
        let models = self.supported.get(&capability).map(Vec::as_slice).unwrap_or_default();
        match model_hint {
            Some(m) if models.iter().any(|x| x == m) => Ok(m.to_string()),
            Some(m) => Err(RoutingError::UnknownModel {
                provider: self.name.clone(),
                model: m.to_string(),
            }),
            None => self
                .default_model
                .get(&capability)
                .filter(|d| models.contains(d))
                .or_else(|| models.first())
                .cloned()
                .ok_or_else(|| RoutingError::UnsupportedCapability {
                    provider: self.name.clone(),
                    capability,
                }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutingConfig {
    pub providers: Vec<ProviderSpec>,
    #[serde(default)]
    pub capability_defaults: BTreeMap<CapabilityId, String>,
    #[serde(default)]
    pub global_default: Option<String>,
    pub version: u64,
}

impl RoutingConfig {
    pub fn provider(&self, name: &str) -> Option<&ProviderSpec> {
        self.providers.iter().find(|p| p.name == name)
    }

    /// Reads and parses a `routing.json` file. Validation is separate.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, RoutingError> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| RoutingError::Malformed(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            RoutingError::Malformed(m) => RoutingError::Malformed(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, RoutingError> {
        serde_json::from_str(text).map_err(|e| RoutingError::Malformed(e.to_string()))
    }

    pub fn to_canonical_json(&self) -> String {
        crate::canonical::to_string(self).expect("config serialization is infallible")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteLevel {
    Request,
    Capability,
    Global,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteBinding {
    pub provider: String,
    pub model: String,
    pub resolved_level: RouteLevel,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RoutingError {
    #[error("unknown provider {0:?}")]
    UnknownProvider(String),
    #[error("provider {provider:?} does not support {capability}")]
    UnsupportedCapability { provider: String, capability: CapabilityId },
    #[error("provider {provider:?} has no model {model:?}")]
    UnknownModel { provider: String, model: String },
    #[error("no route for {capability}: {detail}")]
    NoRoute { capability: CapabilityId, detail: String },
    #[error("{0} is a local tool and is never routed")]
    NotRouted(CapabilityId),
    #[error("routing config failed validation: {}", summarize(.0))]
    ValidationFailed(Vec<Violation>),
    #[error("stale config version {offered} (current {current})")]
    StaleVersion { current: u64, offered: u64 },
    #[error("malformed routing config: {0}")]
    Malformed(String),
    #[error("could not persist routing config: {0}")]
    Persist(String),
}

fn summarize(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| format!("{} at {}", v.code, v.path))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Resolves `capability` against `config`: request hint, then capability
/// default, then global default.
pub fn resolve_route(
    config: &RoutingConfig,
    capability: CapabilityId,
    provider_hint: Option<&str>,
    model_hint: Option<&str>,
) -> Result<RouteBinding, RoutingError> {
    if !capability.is_routed() {
        return Err(RoutingError::NotRouted(capability));
    }
    let bind = |provider: &ProviderSpec, level| {
        if !provider.supports(capability) {
            return Err(RoutingError::UnsupportedCapability {
                provider: provider.name.clone(),
                capability,
            });
        }
        Ok(RouteBinding {
            provider: provider.name.clone(),
            model: provider.pick_model(capability, model_hint)?,
            resolved_level: level,
        })
    };

    if let Some(hint) = provider_hint {
        let provider = config
            .provider(hint)
            .ok_or_else(|| RoutingError::UnknownProvider(hint.to_string()))?;
        return bind(provider, RouteLevel::Request);
    }
    if let Some(name) = config.capability_defaults.get(&capability) {
        let provider = config
            .provider(name)
            .ok_or_else(|| RoutingError::UnknownProvider(name.clone()))?;
        return bind(provider, RouteLevel::Capability);
    }
    let Some(global) = config.global_default.as_deref() else {
        return Err(RoutingError::NoRoute {
            capability,
            detail: "no capability default and no global default".into(),
        });
    };
    match config.provider(global) {
        Some(provider) if provider.supports(capability) => bind(provider, RouteLevel::Global),
        Some(_) => Err(RoutingError::NoRoute {
            capability,
            detail: format!("UnsupportedCapability: global default {global:?} does not support {capability}"),
        }),
        None => Err(RoutingError::NoRoute {
            capability,
            detail: format!("global default {global:?} is not a listed provider"),
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViolationCode {
    MissingGlobalDefault,
    UnknownGlobalDefault,
    EmptyProviderName,
    DuplicateProviderName,
    MockWithBaseUrl,
    HttpMissingBaseUrl,
    LocalCapabilitySupported,
    EmptyModelList,
    MissingDefaultModel,
    DefaultModelNotSupported,
    DefaultUnknownProvider,
    DefaultUnsupported,
    LocalCapabilityDefault,
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    /// Dotted path into the config, e.g. `providers[1].default_model.text_to_image`.
    pub path: String,
    pub message: String,
}

/// Every invariant violation in `config`; empty means valid.
pub fn validate_config(config: &RoutingConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |code, path: String, message: String| out.push(Violation { code, path, message });

    let mut seen = HashSet::new();
    for (i, p) in config.providers.iter().enumerate() {
        let at = format!("providers[{i}]");
        if p.name.trim().is_empty() {
            push(
                ViolationCode::EmptyProviderName,
                format!("{at}.name"),
                "provider name is empty".into(),
            );
        }
        if !seen.insert(p.name.as_str()) {
            push(
                ViolationCode::DuplicateProviderName,
                format!("{at}.name"),
                format!("provider {:?} listed twice", p.name),
            );
        }
        match (p.style, &p.base_url) {
            (ProviderStyle::Mock, Some(_)) => push(
                ViolationCode::MockWithBaseUrl,
                format!("{at}.base_url"),
                "mock providers take no base_url".into(),
            ),
            (ProviderStyle::Http, None) => push(
                ViolationCode::HttpMissingBaseUrl,
                format!("{at}.base_url"),
                "http providers need a base_url".into(),
            ),
            (ProviderStyle::Http, Some(url)) if url.trim().is_empty() => push(
                ViolationCode::HttpMissingBaseUrl,
                format!("{at}.base_url"),
                "http providers need a base_url".into(),
            ),
            _ => {}
        }
        for (cap, models) in &p.supported {
            let path = format!("{at}.supported.{cap}");
            if !cap.is_routed() {
                push(
                    ViolationCode::LocalCapabilitySupported,
                    path.clone(),
                    format!("{cap} is a local tool"),
                );
            }
            if models.is_empty() {
                push(
                    ViolationCode::EmptyModelList,
                    path,
                    "supported model list is empty".into(),
                );
            } else if !p.default_model.contains_key(cap) {
                push(
                    ViolationCode::MissingDefaultModel,
                    format!("{at}.default_model.{cap}"),
                    format!("no default model for {cap}"),
                );
            }
        }
        for (cap, model) in &p.default_model {
            let served = p.supported.get(cap).is_some_and(|m| m.contains(model));
            if !served {
                push(
                    ViolationCode::DefaultModelNotSupported,
                    format!("{at}.default_model.{cap}"),
                    format!("default model {model:?} is not in supported[{cap}]"),
                );
            }
        }
    }

    match &config.global_default {
        None => push(
            ViolationCode::MissingGlobalDefault,
            "global_default".into(),
            "global default is required".into(),
        ),
        Some(name) if config.provider(name).is_none() => push(
            ViolationCode::UnknownGlobalDefault,
            "global_default".into(),
            format!("global default {name:?} is not a listed provider"),
        ),
        Some(_) => {}
    }

    for (cap, name) in &config.capability_defaults {
        let path = format!("capability_defaults.{cap}");
        if !cap.is_routed() {
            push(
                ViolationCode::LocalCapabilityDefault,
                path,
                format!("{cap} is a local tool"),
            );
            continue;
        }
        match config.provider(name) {
            None => push(
                ViolationCode::DefaultUnknownProvider,
                path,
                format!("unknown provider {name:?}"),
            ),
            Some(p) if !p.supports(*cap) => push(
                ViolationCode::DefaultUnsupported,
                path,
                format!("provider {name:?} does not support {cap}"),
            ),
            Some(_) => {}
        }
    }
    out
}

/// Name of the built-in deterministic provider.
pub const MOCK_PROVIDER: &str = "mock";
/// Name of the HTTP provider served by the in-repo stub.
pub const STUB_PROVIDER: &str = "sglang-stub";

fn models(
    entries: &[(CapabilityId, &[&str])],
) -> (BTreeMap<CapabilityId, Vec<String>>, BTreeMap<CapabilityId, String>) {
    let supported = entries
        .iter()
        .map(|(c, m)| (*c, m.iter().map(|s| s.to_string()).collect()))
        .collect();
    let defaults = entries.iter().map(|(c, m)| (*c, m[0].to_string())).collect();
    (supported, defaults)
}

/// The mock provider. It carries the full commercial-platform column of the
/// support matrix (every routed capability) plus text generation.
pub fn mock_provider_spec() -> ProviderSpec {
    use CapabilityId::*;
    let (supported, default_model) = models(&[
        (TextToImage, &["yj-image-v1"]),
        (ImageQa, &["yj-vl-v1"]),
        (TextToVideo, &["yj-video-v1"]),
        (ImageToVideo, &["yj-i2v-v1"]),
        (MultiImageToVideo, &["yj-mi2v-v1"]),
        (TextToSpeech, &["yj-tts-v1"]),
        (DigitalAvatar, &["yj-avatar-v1"]),
        (TextGeneration, &["yj-llm-v1"]),
    ]);
    ProviderSpec {
        name: MOCK_PROVIDER.into(),
        style: ProviderStyle::Mock,
        base_url: None,
        supported,
        default_model,
    }
}

/// The self-hosted HTTP provider: image, image QA and the two single-input
/// video modes, plus text generation. No multi-image video, speech or avatar.
pub fn stub_provider_spec(base_url: impl Into<String>) -> ProviderSpec {
    use CapabilityId::*;
    let (supported, default_model) = models(&[
        (TextToImage, &["flux-1-dev", "qwen-image"]),
        (ImageQa, &["qwen2.5-vl-7b"]),
        (TextToVideo, &["wan2.1-t2v-14b", "hunyuan-video"]),
        (ImageToVideo, &["wan2.1-i2v-14b"]),
        (TextGeneration, &["qwen3-8b"]),
    ]);
    ProviderSpec {
        name: STUB_PROVIDER.into(),
        style: ProviderStyle::Http,
        base_url: Some(base_url.into()),
        supported,
        default_model,
    }
}

/// Default stub address used when no routing.json exists.
pub const DEFAULT_STUB_URL: &str = "http://127.0.0.1:8790";

/// Two-provider table with the mock as global default.
pub fn default_config(stub_url: impl Into<String>) -> RoutingConfig {
    RoutingConfig {
        providers: vec![mock_provider_spec(), stub_provider_spec(stub_url)],
        capability_defaults: BTreeMap::new(),
        global_default: Some(MOCK_PROVIDER.into()),
        version: 1,
    }
}
