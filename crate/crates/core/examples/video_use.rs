//! Transcript-driven editing of raw footage: drop long silences, fillers and
//! repeated takes, then color, subtitle and loudness passes.
//!
//! cargo run --example video_use

use mediaclaw::media::{AudioSegment, Lineage, SynthMedia};
use mediaclaw::skills::edit::EditOp;
use mediaclaw::MediaClaw;
use serde_json::json;

fn raw_footage() -> SynthMedia {
    let mut video = SynthMedia::video_with(640, 360, 5, 5000, |k| [40 + k as u8, 60, 50]);
    video.audio = vec![
        AudioSegment::speech(0, 800, "Welcome to the workshop.", -23.0),
        AudioSegment::speech(800, 1200, "um", -25.0),
        AudioSegment::silence(1200, 2400, -60.0),
        AudioSegment::speech(2400, 3200, "Today we build a kite.", -19.0),
        AudioSegment::speech(3200, 4000, "Today we build a kite!", -18.0),
        AudioSegment::silence(4000, 4200, -60.0),
        AudioSegment::speech(4200, 5000, "Let's start.", -21.0),
    ];
    video
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let home = tempfile::tempdir()?;
    let app = MediaClaw::open(home.path())?;
    let source = app.store().put(raw_footage(), Lineage::direct(vec![]))?;
    let params = json!({"sources": [source.as_str()], "goal": "tight intro"});
    let run = app
        .engine()
        .run_to_completion("video_use", params.as_object().unwrap())
        .await?;

    let plan = run.steps.iter().find(|s| s.header.name == "plan_edit").unwrap();
    let edl: mediaclaw::skills::edit::EditDecisionList = serde_json::from_value(plan.value.clone())?;
    for op in &edl.operations {
        match op {
            EditOp::Keep { segment } => println!("keep  [{:>4}, {:>4})", segment.t0_ms, segment.t1_ms),
            EditOp::Drop { segment, reason } => {
                println!("drop  [{:>4}, {:>4}) {reason:?}", segment.t0_ms, segment.t1_ms)
            }
            EditOp::Transition { effect, at_ms } => println!("{effect} at {at_ms}"),
        }
    }
    let out = app.store().get(&run.final_outputs[0])?;
    println!(
        "edited: {} ms, brightness {} -> {}",
        out.payload.duration_ms, out.payload.meta["brightness_before"], out.payload.meta["brightness_after"]
    );
    for seg in &out.payload.audio {
        println!(
            "  [{:>4}, {:>4}) {:>6.1} LUFS {}",
            seg.t0_ms, seg.t1_ms, seg.loudness_lufs, seg.text
        );
    }
    Ok(())
}
