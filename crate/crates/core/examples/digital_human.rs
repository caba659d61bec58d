//! Script to presenter video: sentence split, action matching, avatar and
//! speech per sentence, assembly and burned subtitles.
//!
//! cargo run --example digital_human

use mediaclaw::media::OverlayRole;
use mediaclaw::MediaClaw;
use serde_json::json;

const SCRIPT: &str = "Hello and welcome to the evening bulletin. Breaking news from the coast tonight. \
Harbor traffic rose twelve percent this quarter. We will be right back.";

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let home = tempfile::tempdir()?;
    let app = MediaClaw::open(home.path())?;
    let params = json!({"script": SCRIPT, "avatar_id": "anchor_01", "scenario": "news_broadcasting"});
    let run = app
        .engine()
        .run_to_completion("digital_human", params.as_object().unwrap())
        .await?;
    let step = |name: &str| run.steps.iter().find(|s| s.header.name == name).unwrap();

    let lines = step("match_actions").value.as_array().cloned().unwrap_or_default();
    let spans = step("assemble").value["spans"].as_array().cloned().unwrap_or_default();
    for (line, span) in lines.iter().zip(&spans) {
        println!(
            "{:>5}-{:<5} {:<16} {}",
            span[0],
            span[1],
            line["action_id"].as_str().unwrap_or(""),
            line["text"].as_str().unwrap_or("")
        );
    }

    let video = app.store().get(&run.final_outputs[0])?;
    for frame in video.payload.frames.iter().step_by(10) {
        let subtitle = frame
            .overlays
            .iter()
            .find(|o| o.role == OverlayRole::Subtitle)
            .map_or("", |o| o.text.as_str());
        println!(
            "t={:>5} action={:<16} lip={:<8} {}",
            frame.t_ms,
            frame.tags.get("action_id").map_or("", String::as_str),
            frame.tags.get("lip_token").map_or("", String::as_str),
            subtitle
        );
    }
    Ok(())
}
