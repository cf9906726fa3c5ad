use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use argbank::corpus::serialize;
use argbank::tagger::synthetic::german_corpus;
use argbank::{default_tagsets, AnnotationGraph};
use argbank_service::wire::{CommandResponse, ErrorBody, SentenceList, SCHEMA_VERSION};
use argbank_service::{router, AnnotationService, ServiceConfig};

fn app() -> (Router, Arc<AnnotationService>) {
    let mut c = german_corpus();
    c.push(
        AnnotationGraph::new(
            "control",
            [
                ("er", "PPER"),
                ("bat", "VVFIN"),
                ("mich", "PPER"),
                ("zu", "PTKZU"),
                ("kommen", "VVINF"),
            ],
            &default_tagsets(),
        )
        .unwrap(),
    )
    .unwrap();
    let s = Arc::new(AnnotationService::new(c, ServiceConfig::default()));
    (router(s.clone()), s)
}

struct Reply {
    status: StatusCode,
    content_type: String,
    body: Vec<u8>,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap()
    }

    fn error(&self) -> ErrorBody {
        serde_json::from_slice(&self.body).unwrap()
    }
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header(header::CONTENT_TYPE, "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let res = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    assert_eq!(
        res.headers()["x-schema-version"].to_str().unwrap(),
        SCHEMA_VERSION.to_string(),
        "{uri}"
    );
    let status = res.status();
    let content_type = res
        .headers()
        .get(header::CONTENT_TYPE)
        .map(|v| v.to_str().unwrap().to_string())
        .unwrap_or_default();
    let body = res.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply {
        status,
        content_type,
        body,
    }
}

async fn get(app: &Router, uri: &str) -> Reply {
    call(app, Method::GET, uri, None).await
}

async fn post(app: &Router, uri: &str, body: Value) -> Reply {
    call(app, Method::POST, uri, Some(body)).await
}

#[tokio::test]
async fn browsing() {
    let (app, _) = app();
    let r = get(&app, "/sentences").await;
    assert_eq!(r.status, StatusCode::OK);
    let list: SentenceList = serde_json::from_slice(&r.body).unwrap();
    assert_eq!(list.schema_version, SCHEMA_VERSION);
    assert_eq!(list.sentences.len(), 21);
    assert_eq!(r.json()["sentences"][0]["status"], "complete");

    let r = get(&app, "/sentence/g4").await;
    assert_eq!(r.status, StatusCode::OK);
    let v = r.json();
    assert_eq!(v["id"], "g4");
    assert_eq!(v["revision"], 0);
    assert_eq!(v["tokens"][2]["form"], "mich");
    assert_eq!(v["edges"][0]["parent"], 500);
    assert!(v["geometry"]["tokens"].is_array());

    let r = get(&app, "/sentence/missing").await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    assert_eq!(r.error().error, "unknown_sentence");
}

#[tokio::test]
async fn commands_and_conflicts() {
    let (app, _) = app();
    let group = json!({
        "base_revision": 0,
        "command": {"op": "group", "children": [4, 5], "category": "VP", "functions": ["PM", "HD"]}
    });
    let r = post(&app, "/sentence/control/command", group.clone()).await;
    assert_eq!(r.status, StatusCode::OK);
    let done: CommandResponse = serde_json::from_slice(&r.body).unwrap();
    assert_eq!(done.revision, 1);
    assert_eq!(done.sentence.nodes.len(), 1);

    // the same envelope again is based on an old revision
    let r = post(&app, "/sentence/control/command", group).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    let e = r.error();
    assert_eq!(e.error, "stale_revision");
    assert_eq!(e.current_revision, Some(1));

    let r = post(
        &app,
        "/sentence/control/command",
        json!({"base_revision": 1, "command": {"op": "relabel", "target": {"node": 500}, "label": "XP"}}),
    )
    .await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    let e = r.error();
    assert_eq!(e.error, "command_refused");
    assert_eq!(r.json()["violations"][0]["rule"], "unknown-label");

    let r = post(
        &app,
        "/sentence/control/command",
        json!({"base_revision": 1, "command": {"op": "comment", "text": "looks fine"}}),
    )
    .await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json()["revision"], 2);
    assert_eq!(r.json()["sentence"]["comments"], json!(["looks fine"]));

    // malformed bodies
    let r = post(&app, "/sentence/control/command", json!({"command": {"op": "dance"}})).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.error().error, "bad_request");
    let r = call(&app, Method::POST, "/sentence/control/command", None).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn suggest_train_and_report() {
    let (app, s) = app();
    let selection = json!({"level": 1, "selection": {"children": [1, 2, 3], "category": "S"}});
    let r = post(&app, "/sentence/control/suggest", selection.clone()).await;
    assert_eq!(r.status, StatusCode::PRECONDITION_FAILED);
    assert_eq!(r.error().error, "no_model");

    let r = post(&app, "/train", json!({})).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json()["skipped_sentences"], 1);

    let before = serialize(&s.corpus()).unwrap();
    let r = post(&app, "/sentence/control/suggest", selection).await;
    assert_eq!(r.status, StatusCode::OK);
    let v = r.json();
    assert_eq!(v["level"], 1);
    assert_eq!(v["revision"], 0);
    assert_eq!(v["proposals"][0]["functions"][1]["suggestion"]["best"]["function"], "HD");
    assert!(v["must_confirm"].as_array().unwrap().contains(&json!(3)));
    assert_eq!(v["bulk_apply"]["op"], "batch");
    assert_eq!(serialize(&s.corpus()).unwrap(), before);

    let r = post(&app, "/sentence/control/suggest", json!({"level": 7})).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.error().error, "unsupported_level");
    let r = post(
        &app,
        "/sentence/control/suggest",
        json!({"level": 2, "selection": {"children": [1, 99]}}),
    )
    .await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);

    let r = get(&app, "/eval-report?repetitions=2&seed=3").await;
    assert_eq!(r.status, StatusCode::OK);
    let v = r.json();
    assert_eq!(v["report"]["rows"].as_array().unwrap().len(), 2);
    assert_eq!(v["table"].as_str().unwrap().lines().count(), 4);
    assert_eq!(get(&app, "/eval-report?repetitions=2&seed=3").await.body, r.body);

    let r = get(&app, "/eval-report?threshold=0.1&target=0.9").await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let r = get(&app, "/eval-report?bogus=1").await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let r = get(&app, "/eval-report?repetitions=0").await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn rendering() {
    let (app, _) = app();
    let r = get(&app, "/render/g17").await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.content_type, "image/svg+xml");
    let svg = String::from_utf8(r.body.clone()).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert_eq!(get(&app, "/render/g17").await.body, r.body);
    assert_eq!(get(&app, "/render/none").await.status, StatusCode::NOT_FOUND);
}

/// The same envelopes give the same corpus whether they arrive over HTTP
/// or directly.
#[tokio::test]
async fn wire_adds_no_semantics() {
    let (_, direct) = app();
    let (app, via_http) = app();
    let script = [
        json!({"op": "group", "children": [4, 5], "category": "VP"}),
        json!({"op": "relabel", "target": {"edge": 4}, "label": "PM"}),
        json!({"op": "relabel", "target": {"edge": 5}, "label": "HD"}),
        json!({"op": "group", "children": [1, 2, 3, 500], "category": "S", "functions": ["SB", "HD", "OA", "OC"]}),
        json!({"op": "set_secondary", "source": 500, "target": 3, "function": "SB", "action": "add"}),
        json!({"op": "comment", "text": "object control"}),
        json!({"op": "detach", "node": 500}),
        json!({"op": "reattach", "node": 500, "parent": 501}),
        json!({"op": "relabel", "target": {"edge": 500}, "label": "OC"}),
        json!({"op": "set_status", "status": "complete"}),
    ];
    for (rev, command) in script.iter().enumerate() {
        let envelope = json!({"sentence_id": "control", "base_revision": rev, "command": command});
        let r = post(&app, "/sentence/control/command", envelope.clone()).await;
        assert_eq!(r.status, StatusCode::OK, "{command}");
        direct
            .apply_command("control", &serde_json::from_value(envelope).unwrap())
            .unwrap();
    }
    assert_eq!(get(&app, "/sentence/control").await.json()["status"], "complete");
    assert_eq!(
        serialize(&via_http.corpus()).unwrap(),
        serialize(&direct.corpus()).unwrap()
    );
}
