//! Video Use: transcript-driven editing of source footage, then color,
//! subtitles and loudness.

use serde_json::{json, Value};

use super::compose::{auto_color, normalize_loudness, DEFAULT_TARGET_BRIGHTNESS, DEFAULT_TARGET_LUFS};
use super::edit::{apply_edit, plan_edit, transcribe, EditDecisionList, EditOptions, Transcript};
use super::{json_text, to_value, SkillError};
use crate::engine::{Skill, StepAction, StepContext, StepError, StepInputs, StepOutput, StepSpec};
use crate::media::{ArtifactId, AudioKind, MediaKind, SynthMedia};
use crate::providers::ass::{emit_ass, AssEvent};
use crate::registry::{CapabilityId, InvokeRequest};
use crate::schema::{ParamSpec, ParamType};

pub const NAME: &str = "video_use";

pub fn skill() -> Skill {
    let defaults = EditOptions::default();
    Skill {
        name: NAME.into(),
        description: "Transcript-driven cut of source footage with color, subtitles and loudness".into(),
        params: vec![
            ParamSpec::required("sources", ParamType::ArtifactList(Some(MediaKind::Video))),
            ParamSpec::optional("goal", ParamType::String),
            ParamSpec::optional("silence_threshold_ms", ParamType::Integer).with_default(defaults.silence_threshold_ms),
            ParamSpec::optional("fillers", ParamType::StringList).with_default(defaults.fillers),
            ParamSpec::optional("target_brightness", ParamType::Integer).with_default(DEFAULT_TARGET_BRIGHTNESS),
            ParamSpec::optional("target_lufs", ParamType::Number).with_default(DEFAULT_TARGET_LUFS),
        ],
        steps: vec![
            StepSpec::single("transcribe", StepAction::Internal, transcribe_step).param("sources"),
            StepSpec::single("plan_edit", StepAction::Internal, plan_step)
                .after("transcribe")
                .param("goal")
                .param("silence_threshold_ms")
                .param("fillers"),
            StepSpec::single("apply_edit", StepAction::Internal, apply_step)
                .param("sources")
                .after("plan_edit"),
            StepSpec::single("auto_color", StepAction::Internal, color_step)
                .after("apply_edit")
                .param("target_brightness"),
            StepSpec::single(
                "subtitles",
                StepAction::invoke(&[CapabilityId::BurnSubtitles]),
                subtitle_step,
            )
            .after("auto_color"),
            StepSpec::single("normalize_loudness", StepAction::Internal, loudness_step)
                .after("subtitles")
                .param("target_lufs"),
        ],
        final_steps: vec!["normalize_loudness".into(), "plan_edit".into()],
    }
}

fn source_ids(inputs: &StepInputs) -> Result<Vec<ArtifactId>, StepError> {
    let ids: Vec<String> = serde_json::from_value(inputs.param("sources")?.clone())
        .map_err(|e| StepError::new("BAD_INPUT", e.to_string()))?;
    Ok(ids.iter().map(|s| ArtifactId::from(s.as_str())).collect())
}

fn bad_param(name: &str, reason: &str) -> StepError {
    StepError::new("BAD_PARAMS", format!("{name}: {reason}"))
}

fn single_output(inputs: &StepInputs, step: &str) -> Result<ArtifactId, StepError> {
    inputs
        .step(step)?
        .artifacts
        .first()
        .cloned()
        .ok_or_else(|| StepError::new("BAD_INPUT", format!("{step} produced no artifact")))
}

async fn transcribe_step(ctx: StepContext, inputs: StepInputs) -> Result<StepOutput, StepError> {
    let mut ids = Vec::new();
    let mut transcripts = Vec::new();
    for source in source_ids(&inputs)? {
        let video = ctx.load(&source)?;
        let transcript = transcribe(&source, &video.payload)?;
        ids.push(ctx.put(json_text(&transcript)?, vec![source])?);
        transcripts.push(transcript);
    }
    Ok(StepOutput::new(ids, to_value(&transcripts)))
}

async fn plan_step(ctx: StepContext, inputs: StepInputs) -> Result<StepOutput, StepError> {
    let transcripts: Vec<Transcript> = inputs.step_value("transcribe")?;
    let threshold = inputs
        .param("silence_threshold_ms")?
        .as_u64()
        .ok_or_else(|| bad_param("silence_threshold_ms", "must be non-negative"))?;
    let fillers: Vec<String> =
        serde_json::from_value(inputs.param("fillers")?.clone()).map_err(|e| bad_param("fillers", &e.to_string()))?;
    let goal = inputs.opt_param("goal").and_then(Value::as_str).unwrap_or_default();
    let options = EditOptions {
        silence_threshold_ms: threshold,
        fillers,
    };
    let edl = plan_edit(&transcripts, goal, &options)?;
    let mut text = SynthMedia::text(edl.to_canonical_json());
    text.meta.insert("format".into(), "edl".into());
    let id = ctx.put(text, edl.sources.clone())?;
    Ok(StepOutput::new(vec![id], to_value(&edl)))
}

async fn apply_step(ctx: StepContext, inputs: StepInputs) -> Result<StepOutput, StepError> {
    let edl: EditDecisionList = inputs.step_value("plan_edit")?;
    let edl_id = single_output(&inputs, "plan_edit")?;
    let ids = source_ids(&inputs)?;
    let loaded = ids.iter().map(|id| ctx.load(id)).collect::<Result<Vec<_>, _>>()?;
    let sources: Vec<(ArtifactId, &SynthMedia)> = ids.iter().cloned().zip(loaded.iter().map(|a| &a.payload)).collect();
    let video = apply_edit(&sources, &edl)?;
    let value = json!({ "duration_ms": video.duration_ms });
    let lineage = ids.into_iter().chain([edl_id]).collect();
    Ok(StepOutput::new(vec![ctx.put(video, lineage)?], value))
}

async fn color_step(ctx: StepContext, inputs: StepInputs) -> Result<StepOutput, StepError> {
    let target = inputs
        .param("target_brightness")?
        .as_u64()
        .and_then(|t| u8::try_from(t).ok())
        .ok_or_else(|| bad_param("target_brightness", "must be within 0..=255"))?;
    let source = single_output(&inputs, "apply_edit")?;
    let video = auto_color(&ctx.load(&source)?.payload, target)?;
    let value = json!({
        "brightness_before": video.meta["brightness_before"],
        "brightness_after": video.meta["brightness_after"],
    });
    Ok(StepOutput::new(vec![ctx.put(video, vec![source])?], value))
}

/// One subtitle event per surviving speech segment.
pub fn speech_events(video: &SynthMedia) -> Vec<AssEvent> {
    video
        .audio
        .iter()
        .filter(|s| s.kind == AudioKind::Speech && !s.text.trim().is_empty())
        .map(|s| AssEvent::new(s.t0_ms, s.t1_ms, s.text.trim()))
        .collect()
}

async fn subtitle_step(ctx: StepContext, inputs: StepInputs) -> Result<StepOutput, StepError> {
    let source = single_output(&inputs, "auto_color")?;
    let events = speech_events(&ctx.load(&source)?.payload);
    let ass = emit_ass(&events).map_err(SkillError::from)?;
    let mut subtitle = SynthMedia::text(ass.clone());
    subtitle.meta.insert("format".into(), "ass".into());
    ctx.put(subtitle, vec![source.clone()])?;
    let burned = ctx
        .invoke(
            InvokeRequest::new(CapabilityId::BurnSubtitles)
                .param("video", source.as_str())
                .param("subtitles_ass", ass),
        )
        .await?;
    Ok(StepOutput::new(vec![burned.artifact_id], json!({ "events": events })))
}

async fn loudness_step(ctx: StepContext, inputs: StepInputs) -> Result<StepOutput, StepError> {
    let target = inputs
        .param("target_lufs")?
        .as_f64()
        .ok_or_else(|| bad_param("target_lufs", "must be a number"))?;
    let source = single_output(&inputs, "subtitles")?;
    let video = normalize_loudness(&ctx.load(&source)?.payload, target)?;
    let value = json!({ "gain_applied": video.meta["gain_applied"] });
    Ok(StepOutput::new(vec![ctx.put(video, vec![source])?], value))
}
