//! Long video: storyboard, then shot-by-shot generation where each shot
//! starts from the last frame of the one before, then concatenation.

use serde_json::{json, Value};

use super::compose::{concat_videos, last_frame_image};
use super::storyboard::Storyboard;
use super::{parse_text, to_value, SkillError};
use crate::canonical;
use crate::engine::{Skill, StepAction, StepContext, StepError, StepInputs, StepOutput, StepSpec};
use crate::media::ArtifactId;
use crate::registry::{CapabilityId, InvokeRequest};
use crate::schema::{ParamSpec, ParamType};

pub const NAME: &str = "long_video";
pub const DEFAULT_SHOT_COUNT: u64 = 3;

pub fn skill() -> Skill {
    Skill {
        name: NAME.into(),
        description: "Multi-shot video with last-frame continuation between shots".into(),
        params: vec![
            ParamSpec::required("requirement", ParamType::String),
            ParamSpec::optional("shot_count", ParamType::Integer).with_default(DEFAULT_SHOT_COUNT),
        ],
        steps: vec![
            StepSpec::single(
                "storyboard",
                StepAction::invoke(&[CapabilityId::TextGeneration]),
                storyboard,
            )
            .param("requirement")
            .param("shot_count"),
            StepSpec::single(
                "segments",
                StepAction::invoke(&[
                    CapabilityId::TextToVideo,
                    CapabilityId::ImageQa,
                    CapabilityId::ImageToVideo,
                ]),
                segments,
            )
            .after("storyboard"),
            StepSpec::single("concat", StepAction::Internal, concat).after("segments"),
        ],
        final_steps: vec!["concat".into()],
    }
}

/// Storyboard request for the model.
pub fn storyboard_prompt(requirement: &str, shot_count: u64) -> Result<String, SkillError> {
    if shot_count == 0 {
        return Err(SkillError::BadShotCount(shot_count));
    }
    Ok(canonical::value_to_string(&json!({
        "requirement": requirement,
        "shot_count": shot_count,
    })))
}

async fn storyboard(ctx: StepContext, inputs: StepInputs) -> Result<StepOutput, StepError> {
    let requirement = inputs.str("requirement")?;
    let shot_count = inputs
        .param("shot_count")?
        .as_i64()
        .map(|n| n.max(0) as u64)
        .unwrap_or(0);
    let prompt = storyboard_prompt(requirement, shot_count)?;
    let result = ctx
        .invoke(
            InvokeRequest::new(CapabilityId::TextGeneration)
                .param("prompt", prompt)
                .param("mode", "storyboard"),
        )
        .await?;
    let board: Storyboard = parse_text(&ctx, &result.artifact_id)?;
    board.check().map_err(SkillError::BadModelOutput)?;
    if board.shots.len() as u64 != shot_count {
        return Err(SkillError::BadModelOutput(format!(
            "asked for {shot_count} shots, storyboard has {}",
            board.shots.len()
        ))
        .into());
    }
    Ok(StepOutput::new(vec![result.artifact_id], to_value(&board)))
}

async fn segments(ctx: StepContext, inputs: StepInputs) -> Result<StepOutput, StepError> {
    let board: Storyboard = inputs.step_value("storyboard")?;
    let mut ids: Vec<ArtifactId> = Vec::with_capacity(board.shots.len());
    let mut refined_prompts = Vec::new();
    for shot in &board.shots {
        let id = match ids.last() {
            None => {
                ctx.invoke(
                    InvokeRequest::new(CapabilityId::TextToVideo)
                        .param("prompt", shot.prompt.as_str())
                        .param("duration_ms", shot.duration_ms),
                )
                .await?
                .artifact_id
            }
            Some(prev_id) => {
                let prev = ctx.load(prev_id)?;
                let frame = ctx.put(last_frame_image(&prev.payload)?, vec![prev_id.clone()])?;
                let answer = ctx
                    .invoke(
                        InvokeRequest::new(CapabilityId::ImageQa)
                            .param("image", frame.as_str())
                            .param("question", format!("refine: {}", shot.prompt)),
                    )
                    .await?;
                let refined = ctx.load_text(&answer.artifact_id)?;
                refined_prompts.push(refined.clone());
                ctx.invoke(
                    InvokeRequest::new(CapabilityId::ImageToVideo)
                        .param("image", frame.as_str())
                        .param("prompt", refined)
                        .param("duration_ms", shot.duration_ms),
                )
                .await?
                .artifact_id
            }
        };
        ids.push(id);
    }
    Ok(StepOutput::new(ids, json!({ "refined_prompts": refined_prompts })))
}

async fn concat(ctx: StepContext, inputs: StepInputs) -> Result<StepOutput, StepError> {
    let ids = inputs.step("segments")?.artifacts.clone();
    let loaded = ids.iter().map(|id| ctx.load(id)).collect::<Result<Vec<_>, _>>()?;
    let videos: Vec<_> = loaded.iter().map(|a| &a.payload).collect();
    let video = concat_videos(&videos)?;
    let value = json!({
        "duration_ms": video.duration_ms,
        "boundaries_ms": video.meta.get("boundaries_ms").cloned().map_or(Value::Null, Value::String),
    });
    let id = ctx.put(video, ids)?;
    Ok(StepOutput::new(vec![id], value))
}
