//! Digital-human broadcast: one avatar clip and one speech track per
//! sentence, spliced, voiced and subtitled.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::actions::{split_sentences, ActionRuleSet, Scenario};
use super::compose::concat_videos;
use super::{json_text, parse_text, to_value, SkillError};
use crate::canonical;
use crate::engine::{Skill, StepAction, StepContext, StepError, StepInputs, StepOutput, StepSpec};
use crate::media::{ArtifactId, MediaKind};
use crate::providers::ass::{emit_ass, AssEvent};
use crate::registry::{CapabilityId, InvokeRequest};
use crate::schema::{ParamSpec, ParamType};

pub const NAME: &str = "digital_human";

const SCENARIOS: &[&str] = &[
    "news_broadcasting",
    "course_lecture",
    "product_introduction",
    "welcome_speech",
];

/// One sentence with its matched action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Line {
    pub text: String,
    pub action_id: String,
}

pub fn skill() -> Skill {
    Skill {
        name: NAME.into(),
        description: "Scripted digital-human broadcast with per-sentence actions, speech and subtitles".into(),
        params: vec![
            ParamSpec::required("script", ParamType::String),
            ParamSpec::required("avatar_id", ParamType::String),
            ParamSpec::optional("scenario", ParamType::OneOf(SCENARIOS)).with_default("news_broadcasting"),
            ParamSpec::optional("rules", ParamType::Json),
        ],
        steps: vec![
            StepSpec::single("split_sentences", StepAction::Internal, split).param("script"),
            StepSpec::single(
                "match_actions",
                StepAction::invoke(&[CapabilityId::TextGeneration]),
                match_actions,
            )
            .after("split_sentences")
            .param("scenario")
            .param("rules"),
            StepSpec::fan_out(
                "avatars",
                StepAction::invoke(&[CapabilityId::DigitalAvatar]),
                plan_lines,
                avatar,
            )
            .after("match_actions")
            .param("avatar_id"),
            StepSpec::fan_out(
                "speech",
                StepAction::invoke(&[CapabilityId::TextToSpeech]),
                plan_lines,
                speech,
            )
            .after("match_actions"),
            StepSpec::single("assemble", StepAction::Internal, assemble)
                .after("match_actions")
                .after("avatars")
                .after("speech"),
            StepSpec::single(
                "subtitles",
                StepAction::invoke(&[CapabilityId::BurnSubtitles]),
                subtitles,
            )
            .after("match_actions")
            .after("assemble"),
        ],
        final_steps: vec!["subtitles".into()],
    }
}

/// Custom rules when supplied, otherwise the scenario's built-in set.
pub fn rules_for(scenario: Option<&str>, custom: Option<&Value>) -> Result<ActionRuleSet, SkillError> {
    let rules = match custom {
        Some(v) => {
            serde_json::from_value::<ActionRuleSet>(v.clone()).map_err(|e| SkillError::BadRules(e.to_string()))?
        }
        None => {
            let name = scenario.unwrap_or("news_broadcasting");
            ActionRuleSet::builtin(
                Scenario::parse(name).ok_or_else(|| SkillError::BadRules(format!("unknown scenario {name:?}")))?,
            )
        }
    };
    rules.check().map_err(SkillError::BadRules)?;
    Ok(rules)
}

async fn split(ctx: StepContext, inputs: StepInputs) -> Result<StepOutput, StepError> {
    let sentences = split_sentences(inputs.str("script")?);
    if sentences.is_empty() {
        return Err(SkillError::EmptyScript.into());
    }
    let id = ctx.put(json_text(&sentences)?, Vec::new())?;
    Ok(StepOutput::new(vec![id], to_value(&sentences)))
}

async fn match_actions(ctx: StepContext, inputs: StepInputs) -> Result<StepOutput, StepError> {
    let sentences: Vec<String> = inputs.step_value("split_sentences")?;
    let rules = rules_for(
        inputs.opt_param("scenario").and_then(Value::as_str),
        inputs.opt_param("rules"),
    )?;
    let prompt = canonical::value_to_string(&json!({ "sentences": sentences, "rules": rules }));
    let result = ctx
        .invoke(
            InvokeRequest::new(CapabilityId::TextGeneration)
                .param("prompt", prompt)
                .param("mode", "action_plan"),
        )
        .await?;
    let actions: Vec<String> = parse_text(&ctx, &result.artifact_id)?;
    if actions.len() != sentences.len() {
        return Err(
            SkillError::BadModelOutput(format!("{} actions for {} sentences", actions.len(), sentences.len())).into(),
        );
    }
    let lines: Vec<Line> = sentences
        .into_iter()
        .zip(actions)
        .map(|(text, action_id)| Line { text, action_id })
        .collect();
    Ok(StepOutput::new(vec![result.artifact_id], to_value(&lines)))
}

fn plan_lines(inputs: &StepInputs) -> Result<Vec<Value>, StepError> {
    let lines: Vec<Line> = inputs.step_value("match_actions")?;
    Ok(lines.iter().map(to_value).collect())
}

fn line(item: Value) -> Result<Line, StepError> {
    serde_json::from_value(item).map_err(|e| StepError::new("BAD_INPUT", e.to_string()))
}

async fn avatar(ctx: StepContext, inputs: StepInputs, item: Value) -> Result<StepOutput, StepError> {
    let line = line(item)?;
    let result = ctx
        .invoke(
            InvokeRequest::new(CapabilityId::DigitalAvatar)
                .param("text", line.text)
                .param("avatar_id", inputs.str("avatar_id")?)
                .param("action_id", line.action_id),
        )
        .await?;
    Ok(StepOutput::artifact(result.artifact_id))
}

async fn speech(ctx: StepContext, _inputs: StepInputs, item: Value) -> Result<StepOutput, StepError> {
    let line = line(item)?;
    let result = ctx
        .invoke(InvokeRequest::new(CapabilityId::TextToSpeech).param("text", line.text))
        .await?;
    Ok(StepOutput::artifact(result.artifact_id))
}

/// `[start, end)` of each segment on the spliced timeline.
fn spans(boundaries: &[u64], total: u64) -> Vec<(u64, u64)> {
    boundaries
        .iter()
        .enumerate()
        .map(|(k, start)| (*start, boundaries.get(k + 1).copied().unwrap_or(total)))
        .collect()
}

async fn assemble(ctx: StepContext, inputs: StepInputs) -> Result<StepOutput, StepError> {
    let avatar_ids = inputs.step("avatars")?.artifacts.clone();
    let speech_ids = inputs.step("speech")?.artifacts.clone();
    let clips = avatar_ids
        .iter()
        .map(|id| ctx.load(id))
        .collect::<Result<Vec<_>, _>>()?;
    let mut video = concat_videos(&clips.iter().map(|a| &a.payload).collect::<Vec<_>>())?;

    let mut starts = Vec::with_capacity(clips.len());
    let mut cursor = 0;
    for clip in &clips {
        starts.push(cursor);
        cursor += clip.payload.duration_ms;
    }
    video.audio.clear();
    for (speech_id, start) in speech_ids.iter().zip(&starts) {
        let track = ctx.load(speech_id)?;
        track.payload.expect_kind(MediaKind::Audio)?;
        video
            .audio
            .extend(track.payload.audio.iter().map(|seg| seg.shifted(*start)));
    }
    let spans = spans(&starts, video.duration_ms);
    let lineage: Vec<ArtifactId> = avatar_ids.into_iter().chain(speech_ids).collect();
    let id = ctx.put(video, lineage)?;
    Ok(StepOutput::new(vec![id], json!({ "spans": spans })))
}

async fn subtitles(ctx: StepContext, inputs: StepInputs) -> Result<StepOutput, StepError> {
    let lines: Vec<Line> = inputs.step_value("match_actions")?;
    let assembled = inputs.step("assemble")?;
    let spans: Vec<(u64, u64)> = serde_json::from_value(assembled.value["spans"].clone())
        .map_err(|e| StepError::new("BAD_INPUT", e.to_string()))?;
    let video = assembled
        .artifacts
        .first()
        .ok_or_else(|| StepError::new("BAD_INPUT", "assemble produced no video"))?;
    let events: Vec<AssEvent> = lines
        .iter()
        .zip(&spans)
        .map(|(line, (start, end))| AssEvent::new(*start, *end, line.text.clone()))
        .collect();
    let ass = emit_ass(&events).map_err(SkillError::from)?;
    let mut subtitle = crate::media::SynthMedia::text(ass.clone());
    subtitle.meta.insert("format".into(), "ass".into());
    ctx.put(subtitle, vec![video.clone()])?;
    let burned = ctx
        .invoke(
            InvokeRequest::new(CapabilityId::BurnSubtitles)
                .param("video", video.as_str())
                .param("subtitles_ass", ass),
        )
        .await?;
    Ok(StepOutput::new(vec![burned.artifact_id], json!({ "events": events })))
}
