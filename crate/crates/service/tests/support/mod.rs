#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use classrefine_core::concepts::{ConceptDictionary, DecomposeOptions};
use classrefine_core::refine::RefineEngine;
use classrefine_core::store::EmbeddingStore;
use classrefine_service::{router, AppState, ServiceConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

pub const DIM: usize = 16;
pub const CONCEPTS: [&str; 12] = [
    "jet", "aircraft", "plane", "quick", "jets", "another", "seen", "than", "reminds", "windows", "military", "sky",
];

fn axis(i: usize) -> Vec<f64> {
    let mut v = vec![0.0; DIM];
    v[i] = 1.0;
    v
}

fn unit(v: Vec<f64>) -> Vec<f32> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| (x / n) as f32).collect()
}

pub fn dictionary() -> ConceptDictionary {
    ConceptDictionary::new(
        CONCEPTS.iter().map(|s| s.to_string()).collect(),
        (0..CONCEPTS.len()).map(axis).collect(),
        None,
    )
    .unwrap()
}

/// "a jet plane" loads on the first ten concepts with decreasing weight, so
/// its decomposition has exactly ten entries.
pub fn store() -> EmbeddingStore {
    let mut jet = vec![0.0; DIM];
    for (i, x) in jet.iter_mut().take(10).enumerate() {
        *x = 1.0 - 0.06 * i as f64;
    }
    let mut fighter = axis(10);
    fighter[0] = 0.5;
    let mut airliner = axis(2);
    airliner[9] = 1.0;
    EmbeddingStore::from_entries(
        DIM,
        true,
        [
            ("a jet plane".to_string(), unit(jet)),
            ("fighter jet".to_string(), unit(fighter)),
            ("airliner".to_string(), unit(airliner)),
            ("propeller".to_string(), unit(axis(13))),
            ("passenger windows".to_string(), unit(axis(9))),
            ("warplane".to_string(), unit(axis(14))),
        ],
    )
    .unwrap()
}

pub fn engine() -> RefineEngine {
    RefineEngine::new(Arc::new(dictionary()), DecomposeOptions::default())
}

pub fn state_with(config: ServiceConfig) -> Arc<AppState> {
    Arc::new(AppState::new(engine(), Arc::new(store()), config).unwrap())
}

pub fn app() -> (Arc<AppState>, Router) {
    let state = state_with(ServiceConfig::default());
    (state.clone(), router(state))
}

pub fn app_with_logs(dir: PathBuf) -> (Arc<AppState>, Router) {
    let state = state_with(ServiceConfig {
        log_dir: Some(dir),
        ..Default::default()
    });
    (state.clone(), router(state))
}

pub struct Reply {
    pub status: StatusCode,
    pub content_type: Option<String>,
    pub bytes: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.bytes).unwrap_or_else(|e| {
            panic!("{}: {e}: {:?}", self.status, String::from_utf8_lossy(&self.bytes))
        })
    }

    pub fn code(&self) -> String {
        self.json()["code"].as_str().unwrap_or_default().to_owned()
    }
}

pub async fn send(app: &Router, method: Method, uri: &str, body: impl Into<Body>) -> Reply {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.into())
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let content_type = resp
        .headers()
        .get("content-type")
        .and_then(|v| v.to_str().ok())
        .map(str::to_owned);
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap().to_vec();
    Reply { status, content_type, bytes }
}

pub async fn post(app: &Router, uri: &str, body: Value) -> Reply {
    send(app, Method::POST, uri, body.to_string()).await
}

pub async fn get(app: &Router, uri: &str) -> Reply {
    send(app, Method::GET, uri, Body::empty()).await
}

pub async fn new_session(app: &Router, texts: &[&str]) -> String {
    let r = post(app, "/sessions", json!({ "class_texts": texts })).await;
    assert_eq!(r.status, StatusCode::CREATED, "{:?}", r.json());
    r.json()["session_id"].as_str().unwrap().to_owned()
}

/// Image A holds one "fighter jet"; image B only an "airplane". The
/// distractor detection in B outscores the true one in A.
pub fn two_image_upload() -> Value {
    json!({
        "ground_truth": {
            "images": [{"id": "A", "width": 100, "height": 100}, {"id": "B", "width": 100, "height": 100}],
            "annotations": [
                {"image_id": "A", "category": "fighter jet", "bbox": [0, 0, 10, 10]},
                {"image_id": "B", "category": "airplane", "bbox": [0, 0, 10, 10]}
            ]
        },
        "detections": [
            {"image_id": "B", "category": "fighter jet", "bbox": [0, 0, 10, 10], "score": 0.95},
            {"image_id": "A", "category": "fighter jet", "bbox": [0.5, 0, 10, 10], "score": 0.9}
        ],
        "category": "fighter jet"
    })
}
