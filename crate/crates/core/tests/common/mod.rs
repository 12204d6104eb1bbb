//! In-process access to the HTTP service for integration tests.
#![allow(dead_code)]

use std::path::PathBuf;
use std::time::Duration;

use axum::body::{to_bytes, Body};
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use tower::ServiceExt;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).expect("fixture readable")
}

pub fn runtime() -> tokio::runtime::Runtime {
    tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()
        .expect("tokio runtime")
}

pub async fn call(app: &Router, method: Method, uri: &str, body: Option<String>) -> (StatusCode, String) {
    let mut req = Request::builder().method(method).uri(uri);
    if body.is_some() {
        req = req.header("content-type", "application/json");
    }
    let req = req.body(body.map_or_else(Body::empty, Body::from)).expect("request");
    let resp = app.clone().oneshot(req).await.expect("router is infallible");
    let status = resp.status();
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.expect("body");
    (status, String::from_utf8(bytes.to_vec()).expect("utf-8 body"))
}

pub async fn get(app: &Router, uri: &str) -> (StatusCode, String) {
    call(app, Method::GET, uri, None).await
}

pub async fn post(app: &Router, uri: &str, body: serde_json::Value) -> (StatusCode, String) {
    call(app, Method::POST, uri, Some(body.to_string())).await
}

/// Polls `/api/jobs/{id}/result` until the job leaves the queue.
pub async fn wait_for(app: &Router, id: &str) -> String {
    for _ in 0..6000 {
        let (status, body) = get(app, &format!("/api/jobs/{id}/result")).await;
        if status != StatusCode::CONFLICT {
            assert_eq!(status, StatusCode::OK, "{body}");
            return body;
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
    panic!("job {id} did not finish");
}

/// Submits an analysis and returns the result document text, waiting for the
/// job when the model is sampled.
pub async fn analyze(app: &Router, body: serde_json::Value) -> (StatusCode, String) {
    let (status, text) = post(app, "/api/analyze", body).await;
    if status != StatusCode::ACCEPTED {
        return (status, text);
    }
    let v: serde_json::Value = serde_json::from_str(&text).expect("job ticket");
    let id = v["id"].as_str().expect("job id").to_string();
    (StatusCode::OK, wait_for(app, &id).await)
}

/// Document text with the wall-clock timestamp lines removed.
pub fn strip_timestamps(doc: &str) -> String {
    doc.lines()
        .filter(|l| {
            let t = l.trim_start();
            !(t.starts_with("\"started\"") || t.starts_with("\"finished\""))
        })
        .collect::<Vec<_>>()
        .join("\n")
}
