//! Every run is an append-only events.jsonl plus a folded record.json.
//! Replaying the log reproduces the record.
//!
//! cargo run --example event_log

use mediaclaw::engine::{RunEvent, SkillRun, EVENTS_FILE, RECORD_FILE};
use mediaclaw::MediaClaw;
use serde_json::json;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let home = tempfile::tempdir()?;
    let app = MediaClaw::open(home.path())?;
    let params = json!({"requirement": "x", "shot_count": 0});
    let run = app
        .engine()
        .run_to_completion("long_video", params.as_object().unwrap())
        .await?;
    println!("run {} ended {:?}: {:?}", run.run_id, run.state, run.error);

    let dir = app.engine().runs_dir().join(&run.run_id);
    let text = std::fs::read_to_string(dir.join(EVENTS_FILE))?;
    let events: Vec<RunEvent> = text.lines().map(serde_json::from_str).collect::<Result<_, _>>()?;
    for e in &events {
        println!("{:>2} {}", e.seq, e.kind());
    }
    let replayed = SkillRun::replay(&run.run_id, &events);
    let record: SkillRun = serde_json::from_str(&std::fs::read_to_string(dir.join(RECORD_FILE))?)?;
    println!("replay matches record.json: {}", replayed == record);
    Ok(())
}
