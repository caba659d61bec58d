//! A MediaClaw home directory wired into a running service: routing table,
//! artifact store, registry and skill engine.
//!
//! Layout under the home directory:
//!
//! ```text
//! routing.json      live routing config, rewritten on every accepted update
//! artifacts/        one manifest per artifact plus index.jsonl
//! runs/<run_id>/    events.jsonl and record.json per skill run
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::{Map, Value};
use thiserror::Error;

use crate::engine::{Engine, EngineError};
use crate::error::ErrorCode;
use crate::media::{ArtifactStore, MediaError};
use crate::registry::Registry;
use crate::routing::{default_config, RoutingConfig, RoutingError, RoutingTable, DEFAULT_STUB_URL};
use crate::skills;

pub const ROUTING_FILE: &str = "routing.json";
pub const ARTIFACTS_DIR: &str = "artifacts";
pub const RUNS_DIR: &str = "runs";

#[derive(Debug, Error)]
pub enum AppError {
    #[error("{}: {source}", path.display())]
    Config { path: PathBuf, source: RoutingError },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Media(#[from] MediaError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

impl ErrorCode for AppError {
    fn code(&self) -> &'static str {
        match self {
            AppError::Config { source, .. } => source.code(),
            AppError::Io { .. } => "IO_ERROR",
            AppError::Media(e) => e.code(),
            AppError::Engine(e) => e.code(),
        }
    }

    fn details(&self) -> Map<String, Value> {
        match self {
            AppError::Config { path, source } => {
                let mut map = source.details();
                map.insert("path".into(), path.display().to_string().into());
                map
            }
            AppError::Io { path, .. } => {
                let mut map = Map::new();
                map.insert("path".into(), path.display().to_string().into());
                map
            }
            _ => Map::new(),
        }
    }
}

pub struct MediaClaw {
    home: PathBuf,
    registry: Arc<Registry>,
    engine: Arc<Engine>,
}

impl MediaClaw {
    /// Opens `home`, creating it with the default routing config if empty.
    /// An existing `routing.json` that fails validation refuses startup.
    pub fn open(home: impl Into<PathBuf>) -> Result<Self, AppError> {
        let home = home.into();
        let path = home.join(ROUTING_FILE);
        let config = if path.exists() {
            RoutingConfig::load(&path).map_err(|source| AppError::Config {
                path: path.clone(),
                source,
            })?
        } else {
            default_config(DEFAULT_STUB_URL)
        };
        Self::open_with(home, config)
    }

    /// Opens `home` with `config`, replacing any stored routing config.
    pub fn open_with(home: impl Into<PathBuf>, config: RoutingConfig) -> Result<Self, AppError> {
        let home = home.into();
        fs::create_dir_all(&home).map_err(|source| AppError::Io {
            path: home.clone(),
            source,
        })?;
        let path = home.join(ROUTING_FILE);
        let routing = RoutingTable::new(config.clone())
            .map_err(|source| AppError::Config {
                path: path.clone(),
                source,
            })?
            .persist_to(&path);
        fs::write(&path, config.to_canonical_json()).map_err(|source| AppError::Io { path, source })?;

        let store = Arc::new(ArtifactStore::open(home.join(ARTIFACTS_DIR))?);
        let registry = Arc::new(Registry::new(store, Arc::new(routing)));
        let engine = Arc::new(Engine::open(registry.clone(), home.join(RUNS_DIR))?);
        skills::register_builtin(&engine)?;
        Ok(MediaClaw { home, registry, engine })
    }

    pub fn home(&self) -> &Path {
        &self.home
    }

    pub fn registry(&self) -> &Arc<Registry> {
        &self.registry
    }

    pub fn engine(&self) -> &Arc<Engine> {
        &self.engine
    }

    pub fn routing(&self) -> &Arc<RoutingTable> {
        self.registry.routing()
    }

    pub fn store(&self) -> &Arc<ArtifactStore> {
        self.registry.store()
    }
}
