#![allow(dead_code)]

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use blockvision_core::session::Instruction;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

pub async fn send(app: &Router, method: Method, uri: &str, body: Vec<u8>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri).body(Body::from(body)).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

pub async fn create(app: &Router, config: &str) -> (StatusCode, Value) {
    let (s, b) = send(app, Method::POST, "/sessions", config.as_bytes().to_vec()).await;
    (s, serde_json::from_slice(&b).unwrap())
}

pub async fn tap(app: &Router, id: &str, t: u64) -> (StatusCode, Vec<u8>) {
    send(app, Method::POST, &format!("/sessions/{id}/tap"), format!("{{\"timestamp\":{t}}}").into_bytes()).await
}

pub async fn tap_ok(app: &Router, id: &str, t: u64) -> Instruction {
    let (s, b) = tap(app, id, t).await;
    assert_eq!(s, StatusCode::OK, "{}", String::from_utf8_lossy(&b));
    serde_json::from_slice(&b).unwrap()
}
