//! Multi-shot video where each shot continues from the previous last frame.
//!
//! cargo run --example long_video -- "a fox crossing a snowy field" 4

use mediaclaw::engine::RunState;
use mediaclaw::MediaClaw;
use serde_json::json;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let requirement = args.next().unwrap_or_else(|| "a harbor waking up at dawn".into());
    let shots: u64 = args.next().map_or(Ok(3), |s| s.parse())?;

    let home = tempfile::tempdir()?;
    let app = MediaClaw::open(home.path())?;
    let params = json!({"requirement": requirement, "shot_count": shots});
    let run = app
        .engine()
        .run_to_completion("long_video", params.as_object().unwrap())
        .await?;
    if run.state != RunState::Succeeded {
        return Err(format!("run failed: {:?}", run.error).into());
    }

    for step in &run.steps {
        println!(
            "{:<12} {:?} attempts={} outputs={}",
            step.header.name,
            step.state,
            step.attempts,
            step.outputs.len()
        );
    }
    let board = &run.steps[0].value;
    for (i, shot) in board["shots"].as_array().into_iter().flatten().enumerate() {
        println!("shot {i}: {} ms  {}", shot["duration_ms"], shot["prompt"]);
    }
    let video = app.store().get(&run.final_outputs[0])?;
    println!(
        "final {}: {} ms, {} frames, boundaries {}",
        video.artifact_id,
        video.payload.duration_ms,
        video.payload.frames.len(),
        video.payload.meta["boundaries_ms"]
    );
    Ok(())
}
