//! Poster generation with a score-and-refine loop.
//!
//! cargo run --example poster

use mediaclaw::skills::poster::PosterOutcome;
use mediaclaw::MediaClaw;
use serde_json::json;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let home = tempfile::tempdir()?;
    let app = MediaClaw::open(home.path())?;
    let params = json!({
        "product_name": "Aurora Kettle",
        "selling_points": ["boils in 90 seconds", "matte steel"],
        "audience": "home baristas",
        "threshold": 82,
    });
    let run = app
        .engine()
        .run_to_completion("poster", params.as_object().unwrap())
        .await?;
    let optimize = run
        .steps
        .iter()
        .find(|s| s.header.name == "optimize")
        .ok_or("no optimize step")?;
    let outcome: PosterOutcome = serde_json::from_value(optimize.value.clone())?;

    for it in &outcome.history {
        println!(
            "iteration {} overall {:>3}  {:?}",
            it.iteration, it.evaluation.overall, it.evaluation.scores
        );
    }
    println!(
        "best iteration {} ({}), stopped early: {}, final artifact {}",
        outcome.best_iteration, outcome.best_overall, outcome.stopped_early, run.final_outputs[0]
    );
    Ok(())
}
