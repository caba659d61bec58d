//! The two local tools: subtitle burn-in from ASS text and green-screen
//! background replacement. Neither goes through provider routing.
//!
//! cargo run --example local_tools

use mediaclaw::media::{Lineage, SynthMedia};
use mediaclaw::providers::ass::{emit_ass, AssEvent};
use mediaclaw::registry::{CapabilityId, InvokeRequest};
use mediaclaw::MediaClaw;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let home = tempfile::tempdir()?;
    let app = MediaClaw::open(home.path())?;
    let green = [
        [20, 200, 30],
        [20, 200, 30],
        [90, 90, 90],
        [66, 100, 66],
        [100, 150, 100],
    ];
    let video = SynthMedia::video_with(640, 360, 5, 1000, |k| green[k as usize]);
    let video = app.store().put(video, Lineage::direct(vec![]))?;
    let backdrop = app
        .store()
        .put(SynthMedia::image(640, 360, [0, 0, 255]), Lineage::direct(vec![]))?;

    let ass = emit_ass(&[AssEvent::new(0, 400, "Ready"), AssEvent::new(600, 1000, "Go")])?;
    let burned = app
        .registry()
        .invoke(
            &InvokeRequest::new(CapabilityId::BurnSubtitles)
                .param("video", video.as_str())
                .param("subtitles_ass", ass),
        )
        .await?;
    let keyed = app
        .registry()
        .invoke(
            &InvokeRequest::new(CapabilityId::ReplaceBackground)
                .param("video", burned.artifact_id.as_str())
                .param("background", backdrop.as_str()),
        )
        .await?;

    println!("provider for local tools: {}", keyed.provider_used);
    let out = app.store().get(&keyed.artifact_id)?;
    for (before, after) in green.iter().zip(&out.payload.frames) {
        let text: Vec<&str> = after.overlays.iter().map(|o| o.text.as_str()).collect();
        println!("t={:>4} {before:?} -> {:?} {text:?}", after.t_ms, after.fill_rgb);
    }
    Ok(())
}
