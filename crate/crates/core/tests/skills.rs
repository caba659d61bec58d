mod common;

use common::{app, install_flaky_avatar, obj, video_use_source, FIVE_SENTENCES};
use mediaclaw::engine::{EventPayload, RunState, StepState};
use mediaclaw::media::{AudioKind, Lineage, MediaKind};
use mediaclaw::providers::ass::parse_ass;
use mediaclaw::skills::poster::PosterOutcome;
use serde_json::json;

#[tokio::test]
async fn long_video_state_trace() {
    let (_dir, app) = app();
    let run_id = app
        .engine()
        .run_skill("long_video", &obj(json!({"requirement": "sea", "shot_count": 3})))
        .unwrap();
    let run = app.engine().wait(&run_id).await.unwrap();
    let (_, events) = app.engine().run_view(&run_id).unwrap();
    assert!(matches!(events.first().unwrap().event, EventPayload::RunStarted { .. }));
    assert!(matches!(events.last().unwrap().event, EventPayload::RunFinished { .. }));
    assert_eq!(run.state, RunState::Succeeded);
    assert_eq!(run.final_outputs.len(), 1);
    assert!(run
        .steps
        .iter()
        .all(|s| s.state == StepState::Succeeded && s.attempts == 1));
    let video = app.store().get(&run.final_outputs[0]).unwrap();
    assert_eq!(video.kind, MediaKind::Video);
    assert_eq!(video.payload.duration_ms, 15000);
}

#[tokio::test]
async fn zero_shots_fail_at_storyboard() {
    let (_dir, app) = app();
    let run = app
        .engine()
        .run_to_completion("long_video", &obj(json!({"requirement": "sea", "shot_count": 0})))
        .await
        .unwrap();
    assert_eq!(run.state, RunState::Failed);
    assert_eq!(run.error.as_ref().unwrap().code, "BAD_SHOT_COUNT");
    assert_eq!(run.steps[run.failure_frontier().unwrap()].header.name, "storyboard");
}

#[tokio::test]
async fn poster_without_product_name_fails() {
    let (_dir, app) = app();
    let run = app
        .engine()
        .run_to_completion("poster", &obj(json!({"product_name": "   "})))
        .await
        .unwrap();
    assert_eq!(run.state, RunState::Failed);
    assert_eq!(run.error.as_ref().unwrap().code, "MISSING_PRODUCT_NAME");
    let run = app.engine().run_to_completion("poster", &obj(json!({}))).await.unwrap();
    assert_eq!(run.error.as_ref().unwrap().code, "MISSING_PRODUCT_NAME");
}

#[tokio::test]
async fn poster_keeps_best_iteration_image() {
    let (_dir, app) = app();
    let params = obj(json!({
        "product_name": "Aurora kettle",
        "selling_points": ["fast boil", "quiet"],
        "threshold": 100,
        "max_iterations": 3,
    }));
    let run = app.engine().run_to_completion("poster", &params).await.unwrap();
    assert_eq!(run.state, RunState::Succeeded);
    let optimize = run.steps.iter().find(|s| s.header.name == "optimize").unwrap();
    let outcome: PosterOutcome = serde_json::from_value(optimize.value.clone()).unwrap();
    assert_eq!(outcome.history.len(), 3);
    assert!(!outcome.stopped_early);
    let best = &outcome.history[outcome.best_iteration as usize - 1];
    assert_eq!(run.final_outputs[0], best.image);
}

#[tokio::test]
async fn digital_human_end_to_end() {
    let (_dir, app) = app();
    let params = obj(json!({"script": FIVE_SENTENCES, "avatar_id": "anchor_01"}));
    let run = app.engine().run_to_completion("digital_human", &params).await.unwrap();
    assert_eq!(run.state, RunState::Succeeded, "{:?}", run.error);
    let video = app.store().get(&run.final_outputs[0]).unwrap();
    assert_eq!(video.payload.meta["subtitle_events"], "5");
    let avatars = run.steps.iter().find(|s| s.header.name == "avatars").unwrap();
    assert_eq!(avatars.outputs.len(), 5);
    let first = app.store().get(&avatars.outputs[0]).unwrap();
    assert_eq!(first.payload.frames[0].tags["action_id"], "wave_hand");
}

#[tokio::test]
async fn digital_human_custom_rules_and_bad_rules() {
    let (_dir, app) = app();
    let rules = json!({
        "scenario": "news_broadcasting",
        "rules": [{"keywords": ["harbor"], "action_id": "point_left"}],
        "default_action_id": "idle",
    });
    let params = obj(json!({"script": FIVE_SENTENCES, "avatar_id": "a", "rules": rules}));
    let run = app.engine().run_to_completion("digital_human", &params).await.unwrap();
    assert_eq!(run.state, RunState::Succeeded, "{:?}", run.error);
    let matched = run.steps.iter().find(|s| s.header.name == "match_actions").unwrap();
    let ids: Vec<&str> = matched
        .value
        .as_array()
        .unwrap()
        .iter()
        .map(|l| l["action_id"].as_str().unwrap())
        .collect();
    assert_eq!(ids, ["idle", "point_left", "idle", "idle", "idle"]);

    let bad = obj(json!({"script": "Hello.", "avatar_id": "a", "rules": {"rules": []}}));
    let run = app.engine().run_to_completion("digital_human", &bad).await.unwrap();
    assert_eq!(run.error.as_ref().unwrap().code, "BAD_RULES");

    let empty = obj(json!({"script": "?!.", "avatar_id": "a"}));
    let run = app.engine().run_to_completion("digital_human", &empty).await.unwrap();
    assert_eq!(run.error.as_ref().unwrap().code, "EMPTY_SCRIPT");
}

#[tokio::test]
async fn digital_human_exhausted_retries_fail_the_run() {
    let (_dir, app) = app();
    install_flaky_avatar(&app, "Prices rose again this week.", 10);
    let params = obj(json!({"script": FIVE_SENTENCES, "avatar_id": "a"}));
    let run = app.engine().run_to_completion("digital_human", &params).await.unwrap();
    assert_eq!(run.state, RunState::Failed);
    let frontier = &run.steps[run.failure_frontier().unwrap()];
    assert_eq!(frontier.header.name, "avatars");
    assert_eq!(frontier.attempts, 3);
    assert_eq!(run.error.as_ref().unwrap().code, "HANDLER_FAILURE");
}

#[tokio::test]
async fn video_use_end_to_end() {
    let (_dir, app) = app();
    let source = app.store().put(video_use_source(), Lineage::direct(vec![])).unwrap();
    let params = obj(json!({"sources": [source.as_str()], "goal": "tight cut"}));
    let run = app.engine().run_to_completion("video_use", &params).await.unwrap();
    assert_eq!(run.state, RunState::Succeeded, "{:?}", run.error);
    assert_eq!(run.final_outputs.len(), 2);
    let video = app.store().get(&run.final_outputs[0]).unwrap();
    assert_eq!(video.payload.duration_ms, 1400);
    let speech: Vec<_> = video
        .payload
        .audio
        .iter()
        .filter(|s| s.kind == AudioKind::Speech)
        .collect();
    assert_eq!(speech.len(), 2);
    assert!(speech.iter().all(|s| s.loudness_lufs == -14.0));
    let edl = app.store().get(&run.final_outputs[1]).unwrap();
    assert_eq!(edl.kind, MediaKind::Text);
    let subtitles = run.steps.iter().find(|s| s.header.name == "subtitles").unwrap();
    let ass = app.store().get(&subtitles.produced[0]).unwrap();
    let events = parse_ass(&ass.payload.text).unwrap();
    assert_eq!(events.len(), 2);
}
