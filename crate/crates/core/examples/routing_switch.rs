//! Three-level routing: request hint, capability default, global default.
//! A live config swap moves traffic to an HTTP provider without a restart.
//!
//! cargo run --example routing_switch

use mediaclaw::providers::stub::{StubMode, StubServer};
use mediaclaw::registry::{CapabilityId, InvokeRequest};
use mediaclaw::routing::{default_config, STUB_PROVIDER};
use mediaclaw::MediaClaw;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let stub = StubServer::start_local(StubMode::Mirror).await?;
    let home = tempfile::tempdir()?;
    let app = MediaClaw::open_with(home.path(), default_config(stub.base_url()))?;
    let image = || InvokeRequest::new(CapabilityId::TextToImage).param("prompt", "lighthouse");

    let show = |label: &str, r: &mediaclaw::registry::InvokeResult| {
        println!("{label:<28} -> {} / {}", r.provider_used, r.model_used);
    };
    show("global default", &app.registry().invoke(&image()).await?);

    let mut hinted = image();
    hinted.provider_hint = Some(STUB_PROVIDER.into());
    show("request hint", &app.registry().invoke(&hinted).await?);

    let mut next = (*app.routing().snapshot()).clone();
    next.version += 1;
    next.capability_defaults
        .insert(CapabilityId::TextToImage, STUB_PROVIDER.into());
    app.routing().apply(next.clone())?;
    show("capability default (v2)", &app.registry().invoke(&image()).await?);

    next.global_default = Some("nobody".into());
    next.version += 1;
    match app.routing().apply(next) {
        Err(e) => println!("rejected v3: {e}"),
        Ok(v) => println!("unexpectedly accepted v{v}"),
    }
    println!("active version still {}", app.routing().version());
    Ok(())
}
