//! The four production skills and the procedures they are built from.

pub mod actions;
pub mod compose;
pub mod digital_human;
pub mod edit;
pub mod long_video;
pub mod poster;
pub mod storyboard;
pub mod templates;
pub mod video_use;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::canonical;
use crate::engine::{Engine, EngineError, StepContext, StepError};
use crate::error::ErrorCode;
use crate::media::{ArtifactId, MediaError, SynthMedia};
use crate::providers::ass::AssError;

#[derive(Debug, Error)]
pub enum SkillError {
    #[error("product_name is required")]
    MissingProductName,
    #[error("shot_count must be at least 1, got {0}")]
    BadShotCount(u64),
    #[error("script has no sentences")]
    EmptyScript,
    #[error("{0} has no audio")]
    NoAudio(String),
    #[error("input {index} is {found:?} (width, height, fps) but input 0 is {expected:?}")]
    MixedDimensions {
        index: usize,
        expected: (u32, u32, u32),
        found: (u32, u32, u32),
    },
    #[error("segment {index} lasts {duration_ms} ms, which is not a whole number of frames")]
    OffGrid { index: usize, duration_ms: u64 },
    #[error("every segment was dropped")]
    EmptyAfterEdit,
    #[error("keep [{t0_ms}, {t1_ms}) of {source_id}: {reason}")]
    RangeOutOfBounds {
        source_id: String,
        t0_ms: u64,
        t1_ms: u64,
        reason: String,
    },
    #[error("no input segments")]
    EmptyInput,
    #[error("invalid action rules: {0}")]
    BadRules(String),
    #[error("unexpected model output: {0}")]
    BadModelOutput(String),
    #[error(transparent)]
    Media(#[from] MediaError),
    #[error(transparent)]
    Ass(#[from] AssError),
}

impl ErrorCode for SkillError {
    fn code(&self) -> &'static str {
        match self {
            SkillError::MissingProductName => "MISSING_PRODUCT_NAME",
            SkillError::BadShotCount(_) => "BAD_SHOT_COUNT",
            SkillError::EmptyScript => "EMPTY_SCRIPT",
            SkillError::NoAudio(_) => "NO_AUDIO",
            SkillError::MixedDimensions { .. } => "MIXED_DIMENSIONS",
            SkillError::OffGrid { .. } => "OFF_GRID",
            SkillError::EmptyAfterEdit => "EMPTY_AFTER_EDIT",
            SkillError::RangeOutOfBounds { .. } => "RANGE_OUT_OF_BOUNDS",
            SkillError::EmptyInput => "EMPTY_INPUT",
            SkillError::BadRules(_) => "BAD_RULES",
            SkillError::BadModelOutput(_) => "BAD_MODEL_OUTPUT",
            SkillError::Media(e) => e.code(),
            SkillError::Ass(e) => e.code(),
        }
    }
}

/// Parses the JSON body of a text artifact produced by a model call.
pub(crate) fn parse_text<T: DeserializeOwned>(ctx: &StepContext, id: &ArtifactId) -> Result<T, StepError> {
    let text = ctx.load_text(id)?;
    serde_json::from_str(&text).map_err(|e| SkillError::BadModelOutput(format!("{id}: {e}")).into())
}

/// A text artifact holding `value` as canonical JSON.
pub(crate) fn json_text<T: Serialize>(value: &T) -> Result<SynthMedia, StepError> {
    let text = canonical::to_string(value).map_err(|e| StepError::new("BAD_MODEL_OUTPUT", e.to_string()))?;
    Ok(SynthMedia::text(text))
}

pub(crate) fn to_value<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).unwrap_or(Value::Null)
}

/// Registers the four built-in skills.
pub fn register_builtin(engine: &Engine) -> Result<(), EngineError> {
    engine.register_skill(poster::skill())?;
    engine.register_skill(long_video::skill())?;
    engine.register_skill(digital_human::skill())?;
    engine.register_skill(video_use::skill())?;
    Ok(())
}
