mod common;

use common::{app, get_json, obj, read_sse};
use mediaclaw::gateway::{ApiError, GatewayServer};
use mediaclaw::media::{Lineage, SynthMedia};
use mediaclaw::routing::{default_config, RoutingConfig, STUB_PROVIDER};
use mediaclaw::MediaClaw;
use serde_json::{json, Value};

struct Reply {
    status: u16,
    body: Value,
}

impl Reply {
    fn error(&self) -> ApiError {
        serde_json::from_value(self.body.clone()).unwrap()
    }
}

async fn send(request: reqwest::RequestBuilder) -> Reply {
    let response = request.send().await.unwrap();
    let status = response.status().as_u16();
    let text = response.text().await.unwrap();
    Reply {
        status,
        body: serde_json::from_str(&text).unwrap_or(Value::String(text)),
    }
}

async fn post(client: &reqwest::Client, url: String, body: &str) -> Reply {
    send(
        client
            .post(url)
            .header("content-type", "application/json")
            .body(body.to_string()),
    )
    .await
}

#[tokio::test]
async fn catalog_and_health() {
    let (_dir, app) = app();
    let gw = GatewayServer::start_local(app.clone()).await.unwrap();
    let client = reqwest::Client::new();
    let health: Value = get_json(&client, &format!("{}/healthz", gw.base_url())).await;
    assert_eq!(health["config_version"], 1);
    let caps: Vec<Value> = get_json(&client, &format!("{}/v1/capabilities", gw.base_url())).await;
    assert_eq!(caps.len(), 10);
    assert!(caps
        .iter()
        .any(|c| c["tool_name"] == "mediaclaw_burn_subtitles" && c["routing_class"] == "local"));
    let skills: Vec<Value> = get_json(&client, &format!("{}/v1/skills", gw.base_url())).await;
    let names: Vec<&str> = skills.iter().map(|s| s["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["digital_human", "long_video", "poster", "video_use"]);
    assert!(skills
        .iter()
        .all(|s| s["params"].as_array().is_some_and(|p| !p.is_empty())));
}

#[tokio::test]
async fn invoke_and_fetch_artifacts() {
    let (_dir, app) = app();
    let gw = GatewayServer::start_local(app.clone()).await.unwrap();
    let base = gw.base_url();
    let client = reqwest::Client::new();
    let reply = post(
        &client,
        format!("{base}/v1/capabilities/mediaclaw_text_to_image:invoke"),
        r#"{"params":{"prompt":"red kite"}}"#,
    )
    .await;
    assert_eq!(reply.status, 200, "{:?}", reply.body);
    assert_eq!(reply.body["provider_used"], "mock");
    let id = reply.body["artifact_id"].as_str().unwrap();

    let artifact: Value = get_json(&client, &format!("{base}/v1/artifacts/{id}")).await;
    assert_eq!(artifact["produced_by"], "direct-invoke");
    assert_eq!(artifact["kind"], "image");
    let content: SynthMedia = get_json(&client, &format!("{base}/v1/artifacts/{id}/content")).await;
    assert_eq!(content, app.store().get(&id.into()).unwrap().payload);

    let reply = send(client.get(format!("{base}/v1/artifacts/art_missing"))).await;
    assert_eq!((reply.status, reply.error().code.as_str()), (404, "NOT_FOUND"));
}

#[tokio::test]
async fn error_bodies_carry_stable_codes() {
    let (_dir, app) = app();
    let image = app
        .store()
        .put(SynthMedia::image(4, 4, [0, 0, 0]), Lineage::direct(vec![]))
        .unwrap();
    let gw = GatewayServer::start_local(app.clone()).await.unwrap();
    let base = gw.base_url();
    let client = reqwest::Client::new();
    let invoke = |tool: &str| format!("{base}/v1/capabilities/{tool}:invoke");

    let cases = [
        (invoke("mediaclaw_nope"), "{}".to_string(), 404, "UNKNOWN_TOOL"),
        (invoke("mediaclaw_text_to_image"), "{}".into(), 400, "SCHEMA_VIOLATION"),
        (invoke("mediaclaw_text_to_image"), "not json".into(), 400, "BAD_REQUEST"),
        (
            invoke("mediaclaw_text_to_image"),
            r#"{"prompt":"x"}"#.into(),
            400,
            "BAD_REQUEST",
        ),
        (
            invoke("mediaclaw_text_to_image"),
            r#"{"params":{"prompt":"x"},"provider":"ghost"}"#.into(),
            400,
            "UNKNOWN_PROVIDER",
        ),
        (
            invoke("mediaclaw_text_to_speech"),
            format!(r#"{{"params":{{"text":"hi"}},"provider":"{STUB_PROVIDER}"}}"#),
            400,
            "UNSUPPORTED_CAPABILITY",
        ),
        (
            invoke("mediaclaw_text_to_image"),
            r#"{"params":{"prompt":"x"},"model":"nope"}"#.into(),
            400,
            "UNKNOWN_MODEL",
        ),
        (
            invoke("mediaclaw_burn_subtitles"),
            r#"{"params":{"video":"v","subtitles_ass":"x"},"provider":"mock"}"#.into(),
            400,
            "HINT_REJECTED_FOR_LOCAL_TOOL",
        ),
        (
            invoke("mediaclaw_image_to_video"),
            format!(
                r#"{{"params":{{"image":"{}","prompt":"p","duration_ms":300}}}}"#,
                image.as_str()
            ),
            400,
            "BAD_PARAMS",
        ),
        (
            format!("{base}/v1/capabilities/mediaclaw_text_to_image:run"),
            "{}".into(),
            404,
            "UNKNOWN_ROUTE",
        ),
        (format!("{base}/v1/skills/nope:run"), "{}".into(), 404, "UNKNOWN_SKILL"),
        (
            format!("{base}/v1/skills/poster:run"),
            r#"{"params":{"threshold":"hi"}}"#.into(),
            400,
            "PARAM_VIOLATION",
        ),
    ];
    for (url, body, status, code) in cases {
        let reply = post(&client, url.clone(), &body).await;
        assert_eq!(
            (reply.status, reply.error().code.as_str()),
            (status, code),
            "{url} {body}"
        );
    }

    let reply = post(&client, invoke("mediaclaw_text_to_image"), r#"{"params":{}}"#).await;
    assert_eq!(reply.error().details["param"], "prompt");
    let reply = send(client.get(format!("{base}/v1/runs/run_nope"))).await;
    assert_eq!((reply.status, reply.error().code.as_str()), (404, "UNKNOWN_RUN"));
    let reply = send(client.get(format!("{base}/v1/nowhere"))).await;
    assert_eq!((reply.status, reply.error().code.as_str()), (404, "UNKNOWN_ROUTE"));
}

#[tokio::test]
async fn routing_put_validates_then_swaps() {
    let (dir, app) = app();
    let gw = GatewayServer::start_local(app.clone()).await.unwrap();
    let base = gw.base_url();
    let client = reqwest::Client::new();
    let put = |body: String| send(client.put(format!("{base}/v1/routing")).body(body));

    let mut config: RoutingConfig = get_json(&client, &format!("{base}/v1/routing")).await;
    let reply = put(config.to_canonical_json()).await;
    assert_eq!((reply.status, reply.error().code.as_str()), (409, "STALE_VERSION"));

    config.version = 2;
    config.global_default = Some("ghost".into());
    let reply = put(config.to_canonical_json()).await;
    assert_eq!((reply.status, reply.error().code.as_str()), (422, "VALIDATION_FAILED"));
    assert_eq!(reply.error().details["violations"][0]["code"], "UnknownGlobalDefault");

    let reply = put("{\"providers\": 3}".into()).await;
    assert_eq!((reply.status, reply.error().code.as_str()), (400, "MALFORMED_CONFIG"));
    assert_eq!(app.routing().version(), 1);

    config.global_default = Some(STUB_PROVIDER.into());
    let reply = put(config.to_canonical_json()).await;
    assert_eq!(reply.status, 200);
    assert_eq!(reply.body["config_version"], 2);
    let health: Value = get_json(&client, &format!("{base}/healthz")).await;
    assert_eq!(health["config_version"], 2);
    let stored = RoutingConfig::load(dir.path().join("routing.json")).unwrap();
    assert_eq!(stored, config);
}

#[tokio::test]
async fn run_lifecycle_over_http() {
    let (_dir, app) = app();
    let gw = GatewayServer::start_local(app.clone()).await.unwrap();
    let base = gw.base_url();
    let client = reqwest::Client::new();
    let reply = post(
        &client,
        format!("{base}/v1/skills/long_video:run"),
        r#"{"params":{"requirement":"sea","shot_count":2}}"#,
    )
    .await;
    let run_id = reply.body["run_id"].as_str().unwrap().to_string();
    let events = read_sse(
        client
            .get(format!("{base}/v1/runs/{run_id}/events"))
            .send()
            .await
            .unwrap(),
        usize::MAX,
    )
    .await;
    let kinds: Vec<String> = events
        .iter()
        .map(|e| {
            serde_json::from_str::<Value>(&e.data).unwrap()["kind"]
                .as_str()
                .unwrap()
                .to_string()
        })
        .collect();
    assert_eq!(kinds.first().unwrap(), "run_started");
    assert_eq!(kinds.last().unwrap(), "run_finished");

    let tail = read_sse(
        client
            .get(format!("{base}/v1/runs/{run_id}/events?from_seq=3"))
            .send()
            .await
            .unwrap(),
        usize::MAX,
    )
    .await;
    assert_eq!(tail, events[3..]);
    let reply = send(client.get(format!("{base}/v1/runs/{run_id}/events?from_seq=x"))).await;
    assert_eq!(reply.error().code, "BAD_REQUEST");

    let run: Value = get_json(&client, &format!("{base}/v1/runs/{run_id}")).await;
    assert_eq!(run["state"], "succeeded");
    let runs: Vec<Value> = get_json(&client, &format!("{base}/v1/runs")).await;
    assert_eq!(runs.len(), 1);
}

#[tokio::test]
async fn invalid_routing_file_refuses_startup() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = default_config("http://127.0.0.1:1");
    config.global_default = Some("ghost".into());
    std::fs::write(dir.path().join("routing.json"), config.to_canonical_json()).unwrap();
    let err = MediaClaw::open(dir.path()).err().unwrap();
    let api = ApiError::from(err);
    assert_eq!(api.code, "VALIDATION_FAILED");
    assert!(api.details["path"].as_str().unwrap().ends_with("routing.json"));
    assert!(api.message.contains("UnknownGlobalDefault"));
}

#[tokio::test]
async fn graceful_stop_drains_runs() {
    let (_dir, app) = app();
    let gw = GatewayServer::start_local(app.clone()).await.unwrap();
    let run_id = app
        .engine()
        .run_skill("long_video", &obj(json!({"requirement": "x"})))
        .unwrap();
    gw.stop().await.unwrap();
    let run = app.engine().get_run(&run_id).unwrap();
    assert!(run.state.is_terminal());
}

/// The run view a frontend renders: steps in order, each output fetchable
/// with a kind that alone selects its preview.
#[tokio::test]
async fn run_view_contract() {
    let (_dir, app) = app();
    let gw = GatewayServer::start_local(app.clone()).await.unwrap();
    let base = gw.base_url();
    let client = reqwest::Client::new();
    let run_id = post(
        &client,
        format!("{base}/v1/skills/long_video:run"),
        r#"{"params":{"requirement":"dunes","shot_count":3}}"#,
    )
    .await
    .body["run_id"]
        .as_str()
        .unwrap()
        .to_string();
    app.engine().wait(&run_id).await.unwrap();

    let run: Value = get_json(&client, &format!("{base}/v1/runs/{run_id}")).await;
    let steps = run["steps"].as_array().unwrap();
    let names: Vec<&str> = steps.iter().map(|s| s["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["storyboard", "segments", "concat"]);
    let mut kinds = Vec::new();
    for step in steps {
        assert_eq!(step["state"], "succeeded");
        assert!(step["attempts"].as_u64().unwrap() >= 1);
        for id in step["outputs"].as_array().unwrap() {
            let meta: Value = get_json(&client, &format!("{base}/v1/artifacts/{}", id.as_str().unwrap())).await;
            kinds.push(meta["kind"].as_str().unwrap().to_string());
        }
        for id in step["produced"].as_array().unwrap() {
            let reply = send(client.get(format!("{base}/v1/artifacts/{}/content", id.as_str().unwrap()))).await;
            assert_eq!(reply.status, 200);
        }
    }
    assert_eq!(kinds, ["text", "video", "video", "video", "video"]);
    assert_eq!(run["final_outputs"], steps[2]["outputs"]);

    let failed = app
        .engine()
        .run_skill("long_video", &obj(json!({"requirement": "x", "shot_count": 0})))
        .unwrap();
    app.engine().wait(&failed).await.unwrap();
    let run: Value = get_json(&client, &format!("{base}/v1/runs/{failed}")).await;
    assert_eq!(run["state"], "failed");
    assert_eq!(run["error"]["code"], "BAD_SHOT_COUNT");
    assert_eq!(run["steps"][0]["state"], "failed");
    assert_eq!(run["steps"][1]["state"], "pending");
}
