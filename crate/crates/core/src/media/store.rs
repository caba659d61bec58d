use std::collections::HashMap;
use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Utc};
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use super::{MediaError, MediaKind, SynthMedia};
use crate::canonical;

/// Opaque artifact identifier (`art_<uuid>`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArtifactId(pub String);

impl ArtifactId {
    fn fresh() -> Self {
        ArtifactId(format!("art_{}", uuid::Uuid::new_v4().simple()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Ids double as file names, so only `[A-Za-z0-9_-]` is accepted.
    fn is_well_formed(&self) -> bool {
        !self.0.is_empty()
            && self
                .0
                .bytes()
                .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
    }
}

impl fmt::Display for ArtifactId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ArtifactId {
    fn from(s: &str) -> Self {
        ArtifactId(s.to_string())
    }
}

/// What produced an artifact: a step of a skill run, or a direct invoke.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Producer {
    DirectInvoke,
    Step { run_id: String, step_index: usize },
}

impl Serialize for Producer {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Producer::DirectInvoke => serializer.serialize_str("direct-invoke"),
            Producer::Step { run_id, step_index } => {
                #[derive(Serialize)]
                struct StepRef<'a> {
                    run_id: &'a str,
                    step_index: usize,
                }
                StepRef {
                    run_id,
                    step_index: *step_index,
                }
                .serialize(serializer)
            }
        }
    }
}

impl<'de> Deserialize<'de> for Producer {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Tag(String),
            Step { run_id: String, step_index: usize },
        }
        match Raw::deserialize(deserializer)? {
            Raw::Tag(t) if t == "direct-invoke" => Ok(Producer::DirectInvoke),
            Raw::Tag(t) => Err(de::Error::custom(format!("unknown producer tag {t:?}"))),
            Raw::Step { run_id, step_index } => Ok(Producer::Step { run_id, step_index }),
        }
    }
}

/// Producer plus the artifacts an output was derived from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lineage {
    pub producer: Producer,
    pub inputs: Vec<ArtifactId>,
}

impl Lineage {
    pub fn direct(inputs: Vec<ArtifactId>) -> Self {
        Lineage {
            producer: Producer::DirectInvoke,
            inputs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediaArtifact {
    pub artifact_id: ArtifactId,
    pub kind: MediaKind,
    pub payload: SynthMedia,
    pub produced_by: Producer,
    pub inputs: Vec<ArtifactId>,
    pub created_at: DateTime<Utc>,
}

/// One line of `artifacts/index.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexRecord {
    pub id: ArtifactId,
    pub kind: MediaKind,
    pub produced_by: Producer,
    pub created_at: DateTime<Utc>,
}

/// File-backed artifact store: `<dir>/<id>.json` per artifact plus an
/// append-only `<dir>/index.jsonl`.
///
/// Artifacts are immutable once published; the in-memory map is only a read
/// cache over the files.
pub struct ArtifactStore {
    dir: PathBuf,
    cache: RwLock<HashMap<ArtifactId, Arc<MediaArtifact>>>,
    index: Mutex<File>,
}

impl fmt::Debug for ArtifactStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ArtifactStore").field("dir", &self.dir).finish()
    }
}

impl ArtifactStore {
    /// Opens (creating if needed) the store rooted at `dir`.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, MediaError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let index = OpenOptions::new()
            .create(true)
            .append(true)
            .open(dir.join("index.jsonl"))?;
        Ok(ArtifactStore {
            dir,
            cache: RwLock::new(HashMap::new()),
            index: Mutex::new(index),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Validates and publishes `payload`. Identical payloads stored twice get
    /// distinct ids.
    pub fn put(&self, payload: SynthMedia, lineage: Lineage) -> Result<ArtifactId, MediaError> {
        payload.validate()?;
        for input in &lineage.inputs {
            if !self.contains(input) {
                return Err(MediaError::InvalidManifest(format!("unknown input artifact {input}")));
            }
        }
        let artifact = MediaArtifact {
            artifact_id: ArtifactId::fresh(),
            kind: payload.kind,
            payload,
            produced_by: lineage.producer,
            inputs: lineage.inputs,
            created_at: Utc::now(),
        };
        let id = artifact.artifact_id.clone();
        let body = canonical::to_string(&artifact).map_err(|e| MediaError::Corrupt(e.to_string()))?;

        let tmp = self.dir.join(format!(".{id}.json.tmp"));
        {
            let mut f = File::create(&tmp)?;
            f.write_all(body.as_bytes())?;
            f.sync_data()?;
        }
        fs::rename(&tmp, self.path_of(&id))?;

        let record = IndexRecord {
            id: id.clone(),
            kind: artifact.kind,
            produced_by: artifact.produced_by.clone(),
            created_at: artifact.created_at,
        };
        let mut line = canonical::to_string(&record).map_err(|e| MediaError::Corrupt(e.to_string()))?;
        line.push('\n');
        {
            let mut index = self.index.lock().expect("index lock poisoned");
            index.write_all(line.as_bytes())?;
        }

        self.cache
            .write()
            .expect("cache lock poisoned")
            .insert(id.clone(), Arc::new(artifact));
        Ok(id)
    }

    pub fn get(&self, id: &ArtifactId) -> Result<Arc<MediaArtifact>, MediaError> {
        if let Some(hit) = self.cache.read().expect("cache lock poisoned").get(id) {
            return Ok(hit.clone());
        }
        if !id.is_well_formed() {
            return Err(MediaError::NotFound(id.to_string()));
        }
        let text = match fs::read_to_string(self.path_of(id)) {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(MediaError::NotFound(id.to_string())),
            Err(e) => return Err(e.into()),
        };
        let artifact: MediaArtifact =
            serde_json::from_str(&text).map_err(|e| MediaError::Corrupt(format!("{id}: {e}")))?;
        let artifact = Arc::new(artifact);
        self.cache
            .write()
            .expect("cache lock poisoned")
            .insert(id.clone(), artifact.clone());
        Ok(artifact)
    }

    pub fn contains(&self, id: &ArtifactId) -> bool {
        self.get(id).is_ok()
    }

    /// Reads back the index file in publication order.
    pub fn index(&self) -> Result<Vec<IndexRecord>, MediaError> {
        let text = fs::read_to_string(self.dir.join("index.jsonl"))?;
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| MediaError::Corrupt(e.to_string())))
            .collect()
    }

    fn path_of(&self, id: &ArtifactId) -> PathBuf {
        self.dir.join(format!("{id}.json"))
    }
}
