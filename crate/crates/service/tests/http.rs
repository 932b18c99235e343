mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use ciflow::bundle::{Bundle, BundleWire};
use ciflow_service::{router, Store};
use common::*;
use http_body_util::BodyExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn raw(app: &Router, method: Method, uri: &str, body: &str) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).body(Body::from(body.to_string())).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

fn error_shape(v: &Value) {
    let obj = v.as_object().unwrap_or_else(|| panic!("not an error object: {v}"));
    assert!(obj.contains_key("code") && obj.contains_key("message") && obj.contains_key("detail"), "{v}");
    assert_eq!(obj.len(), 3);
}

fn app() -> Router {
    router(Arc::new(Store::in_memory(counter_clock())))
}

#[tokio::test]
async fn full_session_over_http() {
    let app = app();
    let def = task_definition("t1", 6, 2, 0);
    let (status, v) = call(&app, Method::POST, "/tasks", Some(serde_json::to_value(&def).unwrap())).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(v["task_id"], "t1");

    let (status, v) = call(&app, Method::POST, "/tasks/t1/sessions", Some(json!({"consent": true}))).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(v["state"], "consented");
    let token = v["token"].as_str().unwrap().to_string();

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut seen = vec![];
    loop {
        let (status, next) = call(&app, Method::GET, &format!("/sessions/{token}/next"), None).await;
        assert_eq!(status, StatusCode::OK);
        if next["item"].is_null() {
            assert_eq!(next["state"], "done");
            assert_eq!(next["progress"], json!({"completed": 5, "total": 5}));
            break;
        }
        let item = &next["item"];
        assert_eq!(item["kinds"], json!(["sender", "recipient", "attribute", "tp"]));
        assert!(item["instructions"].as_str().unwrap().contains("Transmission principle"));
        assert!(item.get("hint").is_none());
        let id = item["excerpt_id"].as_str().unwrap().to_string();
        let sub = answer(&def, &id, false, &mut rng);
        let body = json!({"excerpt_id": sub.excerpt_id, "spans": sub.spans});
        let (status, r) = call(&app, Method::POST, &format!("/sessions/{token}/submit"), Some(body)).await;
        assert_eq!(status, StatusCode::OK, "{r}");
        assert_eq!(r["status"], "accepted");
        seen.push(id);
    }
    assert_eq!(&seen[..3], ["s1", "s2", "s3"]);
    assert_eq!(seen.len(), 5);

    let (status, v) = call(&app, Method::GET, "/tasks/t1/export", None).await;
    assert_eq!(status, StatusCode::OK);
    let wire: BundleWire = serde_json::from_value(v).unwrap();
    let bundle = Bundle::from_wire(wire).unwrap();
    assert_eq!(bundle.responses.len(), 5);
    assert_eq!(bundle.sessions.len(), 1);

    let (status, v) = call(&app, Method::GET, "/tasks/t1/aggregate", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["qualified"], json!(["w0001"]));
    assert_eq!(v["aggregates"].as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn errors_are_structured() {
    let app = app();
    let def = task_definition("t2", 4, 2, 0);
    call(&app, Method::POST, "/tasks", Some(serde_json::to_value(&def).unwrap())).await;

    let cases = [
        (Method::GET, "/sessions/0000/next".to_string(), None, StatusCode::UNAUTHORIZED, "unknown_session"),
        (
            Method::POST,
            "/sessions/0000/submit".into(),
            Some(json!({"excerpt_id": "s1", "spans": []})),
            StatusCode::UNAUTHORIZED,
            "unknown_session",
        ),
        (Method::POST, "/tasks/t2/sessions".into(), Some(json!({"consent": false})), StatusCode::FORBIDDEN, "consent_required"),
        (Method::POST, "/tasks/zz/sessions".into(), Some(json!({"consent": true})), StatusCode::NOT_FOUND, "unknown_task"),
        (Method::GET, "/tasks/zz/export".into(), None, StatusCode::NOT_FOUND, "unknown_task"),
        (
            Method::POST,
            "/tasks".into(),
            Some(serde_json::to_value(&def).unwrap()),
            StatusCode::CONFLICT,
            "task_exists",
        ),
        (Method::POST, "/tasks".into(), Some(json!({"work": []})), StatusCode::UNPROCESSABLE_ENTITY, "invalid_body"),
        (Method::GET, "/nowhere".into(), None, StatusCode::NOT_FOUND, "not_found"),
        (Method::DELETE, "/tasks".into(), None, StatusCode::METHOD_NOT_ALLOWED, "method_not_allowed"),
    ];
    for (method, uri, body, status, code) in cases {
        let (got, v) = call(&app, method.clone(), &uri, body).await;
        assert_eq!(got, status, "{method} {uri}: {v}");
        error_shape(&v);
        assert_eq!(v["code"], code, "{method} {uri}");
    }

    let (_, v) = call(&app, Method::POST, "/tasks/t2/sessions", Some(json!({"consent": true}))).await;
    let token = v["token"].as_str().unwrap();
    let (status, v) = raw(&app, Method::POST, &format!("/sessions/{token}/submit"), "{not json").await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    error_shape(&v);
    let (status, v) = call(
        &app,
        Method::POST,
        &format!("/sessions/{token}/submit"),
        Some(json!({"excerpt_id": "s1", "spans": [{"start": 0, "end": 2, "kind": "villain"}]})),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["detail"]["path"], "spans[0].kind");
    let (status, v) = call(
        &app,
        Method::POST,
        &format!("/sessions/{token}/submit"),
        Some(json!({"excerpt_id": "s1", "spans": [{"start": 0, "end": 2, "kind": "sender"}, {"start": 1, "end": 3, "kind": "tp"}]})),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    error_shape(&v);
    assert_eq!(v["code"], "invalid_spans");
    assert_eq!(v["detail"][0]["index"], 1);
    let (status, v) = call(
        &app,
        Method::POST,
        &format!("/sessions/{token}/submit"),
        Some(json!({"excerpt_id": "x01", "spans": []})),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(v["code"], "not_current_item");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 8)]
async fn fifty_concurrent_sessions_lose_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.jsonl");
    let store = Arc::new(Store::open(&log, counter_clock()).unwrap());
    let app = router(store.clone());
    let def = task_definition("c", 20, 5, 7);
    call(&app, Method::POST, "/tasks", Some(serde_json::to_value(&def).unwrap())).await;

    let mut handles = vec![];
    for i in 0..50u64 {
        let app = app.clone();
        let def = def.clone();
        handles.push(tokio::spawn(async move {
            let (_, v) = call(&app, Method::POST, "/tasks/c/sessions", Some(json!({"consent": true}))).await;
            let token = v["token"].as_str().unwrap().to_string();
            let mut rng = ChaCha8Rng::seed_from_u64(i);
            let mut accepted = 0;
            loop {
                let (_, next) = call(&app, Method::GET, &format!("/sessions/{token}/next"), None).await;
                let Some(id) = next["item"]["excerpt_id"].as_str().map(String::from) else { break };
                let sub = answer(&def, &id, false, &mut rng);
                let body = json!({"excerpt_id": sub.excerpt_id, "spans": sub.spans});
                let (status, _) = call(&app, Method::POST, &format!("/sessions/{token}/submit"), Some(body)).await;
                assert_eq!(status, StatusCode::OK);
                accepted += 1;
            }
            accepted
        }));
    }
    let mut total = 0;
    for h in handles {
        total += h.await.unwrap();
    }
    assert_eq!(total, 50 * 8);
    // one task, 50 sessions, 400 submissions
    assert_eq!(store.record_count(), 1 + 50 + 400);
    let bundle = Bundle::from_wire(store.export("c").unwrap()).unwrap();
    assert_eq!(bundle.responses.len(), 400);

    let lines = std::fs::read_to_string(&log).unwrap();
    assert_eq!(lines.lines().count(), 451);
    for line in lines.lines() {
        let _: Value = serde_json::from_str(line).unwrap();
    }
    let reopened = Store::open(&log, counter_clock()).unwrap();
    assert_eq!(
        serde_json::to_vec(&reopened.export("c").unwrap()).unwrap(),
        serde_json::to_vec(&store.export("c").unwrap()).unwrap()
    );
}
