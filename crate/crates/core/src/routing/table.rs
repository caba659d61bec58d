use std::fs;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use super::{resolve_route, validate_config, ProviderSpec, RouteBinding, RoutingConfig, RoutingError};
use crate::registry::CapabilityId;

/// Live routing config with single-writer atomic swap.
///
/// Readers clone the current `Arc<RoutingConfig>` and resolve against that
/// immutable snapshot, so a resolution sees exactly one config version.
#[derive(Debug)]
pub struct RoutingTable {
    current: RwLock<Arc<RoutingConfig>>,
    writer: Mutex<()>,
    resolutions: AtomicU64,
    persist_to: Option<PathBuf>,
}

impl RoutingTable {
    pub fn new(config: RoutingConfig) -> Result<Self, RoutingError> {
        let violations = validate_config(&config);
        if !violations.is_empty() {
            return Err(RoutingError::ValidationFailed(violations));
        }
        Ok(RoutingTable {
            current: RwLock::new(Arc::new(config)),
            writer: Mutex::new(()),
            resolutions: AtomicU64::new(0),
            persist_to: None,
        })
    }

    /// Accepted updates are also written to `path` (temp file, then rename).
    pub fn persist_to(mut self, path: impl Into<PathBuf>) -> Self {
        self.persist_to = Some(path.into());
        self
    }

    pub fn snapshot(&self) -> Arc<RoutingConfig> {
        self.current.read().expect("routing lock poisoned").clone()
    }

    pub fn version(&self) -> u64 {
        self.snapshot().version
    }

    /// Resolves against the current snapshot, returning the version used.
    pub fn resolve(
        &self,
        capability: CapabilityId,
        provider_hint: Option<&str>,
        model_hint: Option<&str>,
    ) -> Result<(Arc<RoutingConfig>, RouteBinding), RoutingError> {
        self.resolutions.fetch_add(1, Ordering::Relaxed);
        let snapshot = self.snapshot();
        let binding = resolve_route(&snapshot, capability, provider_hint, model_hint)?;
        Ok((snapshot, binding))
    }

    /// Number of resolutions served so far.
    pub fn resolution_count(&self) -> u64 {
        self.resolutions.load(Ordering::Relaxed)
    }

    /// Validate-then-swap. The new version must be strictly greater.
    pub fn apply(&self, new: RoutingConfig) -> Result<u64, RoutingError> {
        let _gate = self.writer.lock().expect("routing writer poisoned");
        let current = self.snapshot().version;
        if new.version <= current {
            return Err(RoutingError::StaleVersion {
                current,
                offered: new.version,
            });
        }
        self.install(new)
    }

    /// Appends a provider to the live table under a bumped version.
    pub(crate) fn add_provider(&self, spec: ProviderSpec) -> Result<u64, RoutingError> {
        let _gate = self.writer.lock().expect("routing writer poisoned");
        let mut next = (*self.snapshot()).clone();
        next.providers.push(spec);
        next.version += 1;
        self.install(next)
    }

    fn install(&self, new: RoutingConfig) -> Result<u64, RoutingError> {
        let violations = validate_config(&new);
        if !violations.is_empty() {
            return Err(RoutingError::ValidationFailed(violations));
        }
        if let Some(path) = &self.persist_to {
            let tmp = path.with_extension("json.tmp");
            fs::write(&tmp, new.to_canonical_json())
                .and_then(|_| fs::rename(&tmp, path))
                .map_err(|e| RoutingError::Persist(e.to_string()))?;
        }
        let version = new.version;
        *self.current.write().expect("routing lock poisoned") = Arc::new(new);
        Ok(version)
    }
}
