//! The HTTP gateway: invoke a tool, start a skill run and follow its event
//! stream over SSE.
//!
//! cargo run --example gateway_server

use std::sync::Arc;

use mediaclaw::gateway::GatewayServer;
use mediaclaw::MediaClaw;
use serde_json::Value;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let home = tempfile::tempdir()?;
    let app = Arc::new(MediaClaw::open(home.path())?);
    let gateway = GatewayServer::start_local(app).await?;
    let base = gateway.base_url();
    let client = reqwest::Client::new();
    println!("gateway on {base}");

    let reply = client
        .post(format!("{base}/v1/capabilities/mediaclaw_text_to_speech:invoke"))
        .body(r#"{"params":{"text":"Good evening."}}"#)
        .send()
        .await?
        .text()
        .await?;
    println!("invoke -> {reply}");

    let reply = client
        .post(format!("{base}/v1/capabilities/mediaclaw_nope:invoke"))
        .body("{}")
        .send()
        .await?;
    println!("unknown tool -> {} {}", reply.status(), reply.text().await?);

    let reply: Value = serde_json::from_str(
        &client
            .post(format!("{base}/v1/skills/long_video:run"))
            .body(r#"{"params":{"requirement":"clouds over hills","shot_count":2}}"#)
            .send()
            .await?
            .text()
            .await?,
    )?;
    let run_id = reply["run_id"].as_str().ok_or("no run_id")?;

    let mut stream = client.get(format!("{base}/v1/runs/{run_id}/events")).send().await?;
    let mut buffer = String::new();
    while let Some(chunk) = stream.chunk().await? {
        buffer.push_str(std::str::from_utf8(&chunk)?);
    }
    for line in buffer.lines().filter_map(|l| l.strip_prefix("data:")) {
        let event: Value = serde_json::from_str(line.trim())?;
        println!("seq {:>2} {}", event["seq"], event["kind"].as_str().unwrap_or(""));
    }

    gateway.stop().await?;
    Ok(())
}
