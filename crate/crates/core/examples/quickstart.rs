//! Open a home directory, list the tool catalog and invoke one capability.
//!
//! cargo run --example quickstart

use mediaclaw::registry::{CapabilityId, InvokeRequest};
use mediaclaw::MediaClaw;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let home = tempfile::tempdir()?;
    let app = MediaClaw::open(home.path())?;

    for tool in app.registry().list_capabilities() {
        println!("{:<32} {:?}", tool.descriptor.tool_name, tool.descriptor.routing_class);
    }

    let result = app
        .registry()
        .invoke(
            &InvokeRequest::new(CapabilityId::TextToVideo)
                .param("prompt", "lanterns on a river")
                .param("duration_ms", 2000),
        )
        .await?;
    println!(
        "\n{} via {}/{}",
        result.artifact_id, result.provider_used, result.model_used
    );

    let artifact = app.store().get(&result.artifact_id)?;
    let video = &artifact.payload;
    println!(
        "{}x{} @ {} fps, {} ms, {} frames, first fill {:?}",
        video.width.unwrap_or(0),
        video.height.unwrap_or(0),
        video.fps.unwrap_or(0),
        video.duration_ms,
        video.frames.len(),
        video.frames[0].fill_rgb
    );
    Ok(())
}
