//! Poster generation: brief, then generate-evaluate iterations that keep the
//! best poster and stop once the threshold is reached.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::templates::POSTER_DIMENSIONS;
use super::{json_text, parse_text, to_value, SkillError};
use crate::canonical;
use crate::engine::{Skill, StepAction, StepContext, StepError, StepInputs, StepOutput, StepSpec};
use crate::media::ArtifactId;
use crate::registry::{CapabilityId, InvokeRequest};
use crate::schema::{ParamSpec, ParamType};

pub const NAME: &str = "poster";
pub const DEFAULT_THRESHOLD: u64 = 85;
pub const DEFAULT_MAX_ITERATIONS: u64 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PosterBrief {
    pub product_name: String,
    pub audience: String,
    pub selling_points: Vec<String>,
    pub brand_tone: String,
}

impl PosterBrief {
    /// Generation prompt with the four fields in fixed order.
    pub fn prompt(&self) -> String {
        format!(
            "poster | {} | {} | {} | {}",
            self.product_name,
            self.audience,
            self.selling_points.join(";"),
            self.brand_tone
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PosterEvaluation {
    pub scores: BTreeMap<String, u32>,
    /// Mean of the five scores, rounded half up.
    pub overall: u32,
}

impl PosterEvaluation {
    pub fn from_scores(scores: BTreeMap<String, u32>) -> Self {
        let sum: u32 = scores.values().sum();
        let n = scores.len().max(1) as u32;
        PosterEvaluation {
            overall: (2 * sum + n) / (2 * n),
            scores,
        }
    }

    /// The two lowest-scoring dimensions, ties broken by the fixed order.
    pub fn weakest_two(&self) -> Vec<&'static str> {
        let mut dims: Vec<(u32, usize, &'static str)> = POSTER_DIMENSIONS
            .iter()
            .enumerate()
            .map(|(i, d)| (self.scores.get(*d).copied().unwrap_or(0), i, *d))
            .collect();
        dims.sort();
        dims.into_iter().take(2).map(|(_, _, d)| d).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PosterIteration {
    /// 1-based.
    pub iteration: u64,
    pub prompt: String,
    pub image: ArtifactId,
    pub evaluation: PosterEvaluation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PosterOutcome {
    pub best_iteration: u64,
    pub best_overall: u32,
    pub stopped_early: bool,
    pub history: Vec<PosterIteration>,
}

pub fn skill() -> Skill {
    Skill {
        name: NAME.into(),
        description: "Product poster with evaluate-and-refine iterations and best-result retention".into(),
        params: vec![
            ParamSpec::optional("product_name", ParamType::Text),
            ParamSpec::optional("audience", ParamType::String),
            ParamSpec::optional("selling_points", ParamType::StringList),
            ParamSpec::optional("brand_tone", ParamType::String),
            ParamSpec::optional("threshold", ParamType::Integer).with_default(DEFAULT_THRESHOLD),
            ParamSpec::optional("max_iterations", ParamType::PositiveInteger).with_default(DEFAULT_MAX_ITERATIONS),
        ],
        steps: vec![
            StepSpec::single("brief", StepAction::invoke(&[CapabilityId::TextGeneration]), brief)
                .param("product_name")
                .param("audience")
                .param("selling_points")
                .param("brand_tone"),
            StepSpec::single(
                "optimize",
                StepAction::invoke(&[CapabilityId::TextToImage, CapabilityId::ImageQa]),
                optimize,
            )
            .after("brief")
            .param("threshold")
            .param("max_iterations"),
        ],
        final_steps: vec!["optimize".into()],
    }
}

/// Model input for structuring a raw poster request.
pub fn brief_request(raw: &Map<String, Value>) -> Result<String, SkillError> {
    let product = raw.get("product_name").and_then(Value::as_str).unwrap_or_default();
    if product.trim().is_empty() {
        return Err(SkillError::MissingProductName);
    }
    Ok(canonical::value_to_string(&Value::Object(raw.clone())))
}

async fn brief(ctx: StepContext, inputs: StepInputs) -> Result<StepOutput, StepError> {
    let mut raw = Map::new();
    for key in ["product_name", "audience", "selling_points", "brand_tone"] {
        if let Some(v) = inputs.opt_param(key) {
            raw.insert(key.to_string(), v.clone());
        }
    }
    let result = ctx
        .invoke(
            InvokeRequest::new(CapabilityId::TextGeneration)
                .param("prompt", brief_request(&raw)?)
                .param("mode", "brief"),
        )
        .await?;
    let brief: PosterBrief = parse_text(&ctx, &result.artifact_id)?;
    if brief.product_name.trim().is_empty() || brief.selling_points.is_empty() {
        return Err(SkillError::BadModelOutput("brief lacks a product or selling points".into()).into());
    }
    Ok(StepOutput::new(vec![result.artifact_id], to_value(&brief)))
}

/// Scores `image` on every dimension with one image QA call each.
pub async fn evaluate_poster(
    ctx: &StepContext,
    image: &ArtifactId,
    brief: &PosterBrief,
) -> Result<PosterEvaluation, StepError> {
    let mut scores = BTreeMap::new();
    for dimension in POSTER_DIMENSIONS {
        let answer = ctx
            .invoke(
                InvokeRequest::new(CapabilityId::ImageQa)
                    .param("image", image.as_str())
                    .param("question", format!("score:{dimension}|{}", brief.prompt())),
            )
            .await?;
        let text = ctx.load_text(&answer.artifact_id)?;
        let score = text
            .strip_prefix(dimension)
            .and_then(|rest| rest.strip_prefix('='))
            .and_then(|n| n.trim().parse::<u32>().ok())
            .filter(|n| *n <= 100)
            .ok_or_else(|| SkillError::BadModelOutput(format!("unreadable score {text:?} for {dimension}")))?;
        scores.insert(dimension.to_string(), score);
    }
    Ok(PosterEvaluation::from_scores(scores))
}

async fn optimize(ctx: StepContext, inputs: StepInputs) -> Result<StepOutput, StepError> {
    let brief: PosterBrief = inputs.step_value("brief")?;
    let threshold = inputs.param("threshold")?.as_i64().unwrap_or(DEFAULT_THRESHOLD as i64);
    let max_iterations = inputs.u64("max_iterations")?;
    let base = brief.prompt();

    let mut history: Vec<PosterIteration> = Vec::new();
    let mut best: Option<usize> = None;
    let mut stopped_early = false;
    for iteration in 1..=max_iterations {
        let prompt = match history.last() {
            None => base.clone(),
            Some(prev) => format!("{base} | improve:{}", prev.evaluation.weakest_two().join(",")),
        };
        let image = ctx
            .invoke(InvokeRequest::new(CapabilityId::TextToImage).param("prompt", prompt.as_str()))
            .await?
            .artifact_id;
        let evaluation = evaluate_poster(&ctx, &image, &brief).await?;
        let record = PosterIteration {
            iteration,
            prompt,
            image: image.clone(),
            evaluation,
        };
        ctx.put(json_text(&record)?, vec![image])?;
        let overall = record.evaluation.overall;
        if best.is_none_or(|b| overall > history[b].evaluation.overall) {
            best = Some(history.len());
        }
        history.push(record);
        if i64::from(overall) >= threshold {
            stopped_early = true;
            break;
        }
    }
    let best = &history[best.expect("max_iterations is at least 1")];
    let outcome = PosterOutcome {
        best_iteration: best.iteration,
        best_overall: best.evaluation.overall,
        stopped_early,
        history: history.clone(),
    };
    let images: Vec<ArtifactId> = history.iter().map(|h| h.image.clone()).collect();
    let history_id = ctx.put(json_text(&outcome)?, images)?;
    Ok(StepOutput::new(
        vec![best.image.clone(), history_id],
        to_value(&outcome),
    ))
}
