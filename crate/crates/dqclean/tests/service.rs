mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use dqclean::service::router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, bytes, _) = call_raw(app, method, uri, body).await;
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

async fn call_raw(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>, String) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let ctype = resp.headers().get("content-type").map(|v| v.to_str().unwrap().to_string()).unwrap_or_default();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes, ctype)
}

fn app(root: &std::path::Path) -> Router {
    router(Arc::new(common::small_store(root)))
}

#[tokio::test]
async fn health() {
    let tmp = tempfile::tempdir().unwrap();
    let app = app(tmp.path());
    assert_eq!(call(&app, Method::GET, "/health", None).await, (StatusCode::OK, json!({"status": "ok"})));
}

#[tokio::test]
async fn annotation_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let app = app(tmp.path());
    let (status, created) = call(
        &app,
        Method::POST,
        "/sessions",
        Some(json!({"dataset": "small", "noise_type": "near_duplicate", "annotator": "ann", "p_plus": 0.5, "p_chance": 0.25})),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED, "{created}");
    assert_eq!(created["n_clean"], 2);
    let id = created["session_id"].as_str().unwrap().to_string();

    let (status, next) = call(&app, Method::GET, &format!("/sessions/{id}/next"), None).await;
    assert_eq!(status, StatusCode::OK);
    let candidate = next["candidate"].as_object().unwrap();
    let mut keys: Vec<_> = candidate.keys().cloned().collect();
    keys.sort();
    assert_eq!(keys, ["ids", "image_urls", "kind"]);
    let top: Vec<_> = next.as_object().unwrap().keys().cloned().collect();
    assert_eq!(top.len(), 2, "{next}");
    let text = next.to_string();
    for hidden in ["rank", "score", "streak", "cursor"] {
        assert!(!text.contains(hidden), "{hidden} leaked: {text}");
    }
    assert_eq!(next["candidate"]["image_urls"][0], "/images/s03?dataset=small");
    let ids = next["candidate"]["ids"].clone();

    let answer = |ids: Value, verdict: &str| json!({"ids": ids, "verdict": verdict});
    let uri = format!("/sessions/{id}/answer");
    let (status, ack) = call(&app, Method::POST, &uri, Some(answer(ids.clone(), "no"))).await;
    assert_eq!((status, ack["annotated_count"].clone()), (StatusCode::OK, json!(1)));
    let (status, err) = call(&app, Method::POST, &uri, Some(answer(ids, "no"))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["code"], "StaleCandidate");

    let (_, next) = call(&app, Method::GET, &format!("/sessions/{id}/next"), None).await;
    let (_, ack) = call(&app, Method::POST, &uri, Some(answer(next["candidate"]["ids"].clone(), "no"))).await;
    assert_eq!(ack["status"], "stopped_by_criterion");
    let (status, next) = call(&app, Method::GET, &format!("/sessions/{id}/next"), None).await;
    assert_eq!((status, next), (StatusCode::OK, json!({"status": "stopped_by_criterion"})));
    let (status, err) = call(&app, Method::POST, &uri, Some(answer(json!(["s00", "s01"]), "no"))).await;
    assert_eq!((status, err["code"].clone()), (StatusCode::CONFLICT, json!("SessionTerminated")));

    let (status, view) = call(&app, Method::GET, &format!("/sessions/{id}/status"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(view["annotated_count"], 2);
    assert_eq!(view["pool_size"], 190);

    let (status, sens) = call(&app, Method::GET, &format!("/sessions/{id}/sensitivity?grid=0.25:0.5"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(sens["points"].as_array().unwrap().len(), 1);
}

#[tokio::test]
async fn error_mapping() {
    let tmp = tempfile::tempdir().unwrap();
    let app = app(tmp.path());
    let (status, err) = call(&app, Method::GET, "/sessions/nope/status", None).await;
    assert_eq!((status, err["code"].clone()), (StatusCode::NOT_FOUND, json!("UnknownSession")));
    let (status, err) = call(&app, Method::POST, "/sessions", Some(json!({"dataset": "small"}))).await;
    assert_eq!((status, err["code"].clone()), (StatusCode::BAD_REQUEST, json!("BadRequest")));
    let (status, err) = call(
        &app,
        Method::POST,
        "/sessions",
        Some(json!({"dataset": "small", "noise_type": "irrelevant", "annotator": "a", "p_plus": 2.0})),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{err}");
    let (status, _) = call(&app, Method::GET, "/datasets/small/aggregate?mode=bogus", None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, err) =
        call(&app, Method::POST, "/datasets/ghost/rank", Some(json!({"noise_type": "irrelevant"}))).await;
    assert_eq!((status, err["code"].clone()), (StatusCode::NOT_FOUND, json!("UnknownDataset")));

    let src = tmp.path().join("bad");
    std::fs::create_dir_all(&src).unwrap();
    common::write_manifest(
        &src.join("m.jsonl"),
        &[("a".into(), "a.png".into(), None), ("b".into(), "b.png".into(), None), ("c".into(), "c.png".into(), None)],
    );
    std::fs::write(src.join("e.csv"), "id,e0\na,1\nb,2\n").unwrap();
    let (status, err) = call(
        &app,
        Method::POST,
        "/datasets",
        Some(json!({"name": "bad", "manifest": src.join("m.jsonl"), "embeddings": src.join("e.csv")})),
    )
    .await;
    assert_eq!((status, err["code"].clone()), (StatusCode::UNPROCESSABLE_ENTITY, json!("ShapeMismatch")));
    assert!(err["message"].as_str().unwrap().contains("expected 3 rows, found 2"));
}

#[tokio::test]
async fn annotator_header_and_dataset_endpoints() {
    let tmp = tempfile::tempdir().unwrap();
    let app = app(tmp.path());
    let req = Request::builder()
        .method(Method::POST)
        .uri("/sessions")
        .header("content-type", "application/json")
        .header("x-annotator-id", "hdr")
        .body(Body::from(json!({"dataset": "small", "noise_type": "irrelevant"}).to_string()))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::CREATED);
    let body: Value = serde_json::from_slice(&resp.into_body().collect().await.unwrap().to_bytes()).unwrap();
    let id = body["session_id"].as_str().unwrap();
    let (_, view) = call(&app, Method::GET, &format!("/sessions/{id}/status"), None).await;
    assert_eq!(view["annotator"], "hdr");

    let (status, list) = call(&app, Method::GET, "/datasets", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(list[0]["name"], "small");
    let (status, rank) = call(
        &app,
        Method::POST,
        "/datasets/small/rank",
        Some(json!({"noise_type": "irrelevant", "metric": "euclidean"})),
    )
    .await;
    assert_eq!((status, rank["len"].clone()), (StatusCode::OK, json!(20)));
    let (status, err) =
        call(&app, Method::POST, "/datasets/small/rank", Some(json!({"noise_type": "irrelevant", "metric": "cosine"})))
            .await;
    assert_eq!((status, err["code"].clone()), (StatusCode::CONFLICT, json!("RankingLocked")));
    let (status, agg) = call(&app, Method::GET, "/datasets/small/aggregate?mode=unanimous", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(agg["mode"], "unanimous");
    let (status, clean) =
        call(&app, Method::POST, "/datasets/small/clean", Some(json!({"mode": "majority", "seed": 1}))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(clean["cleaned_ids"].as_array().unwrap().len(), 20);
    let (status, _) = call(&app, Method::GET, "/datasets/small/stats/agreement?reps=50", None).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn images_are_served() {
    let tmp = tempfile::tempdir().unwrap();
    let syn = common::synthetic_corpus(&tmp.path().join("src"));
    let store = common::open_store(&tmp.path().join("data"));
    store
        .register_dataset(&dqclean::store::RegisterDataset {
            name: "syn".into(),
            manifest: syn.manifest,
            embeddings: None,
            baseline: Some(8),
            image_dir: None,
        })
        .unwrap();
    let app = router(Arc::new(store));
    let (status, bytes, ctype) = call_raw(&app, Method::GET, "/images/odd_0?dataset=syn", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ctype, "image/png");
    assert_eq!(&bytes[1..4], b"PNG");
    let (status, _, _) = call_raw(&app, Method::GET, "/images/missing?dataset=syn", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _, _) = call_raw(&app, Method::GET, "/images/odd_0?dataset=nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}
