use std::collections::BTreeSet;

use axum::http::{Method, StatusCode};
use classrefine_core::refine::FeedbackAdjustment;
use classrefine_core::store::decode_definition;
use classrefine_core::vectormath::AdjustmentWeights;
use classrefine_service::{router, views, ServiceConfig};
use serde_json::{json, Value};

use crate::support::*;

pub async fn create_session_examples() {
    let (_, app) = app();
    let r = post(&app, "/sessions", json!({"class_texts": ["a jet plane"]})).await;
    assert_eq!(r.status, StatusCode::CREATED);
    assert_eq!(r.content_type.as_deref(), Some("application/json"));
    let body = r.json();
    let concepts = body["classes"][0]["concepts"].as_array().unwrap();
    assert_eq!(concepts.len(), 10);
    assert_eq!(concepts[0]["label"], "jet");
    let weights: Vec<f64> = concepts.iter().map(|c| c["weight"].as_f64().unwrap()).collect();
    assert!(weights.windows(2).all(|w| w[0] >= w[1]));

    let r = post(&app, "/sessions", json!({"class_texts": []})).await;
    assert_eq!((r.status, r.code().as_str()), (StatusCode::UNPROCESSABLE_ENTITY, "EmptyClassList"));
    let r = post(&app, "/sessions", json!({"class_texts": ["a tank"]})).await;
    assert_eq!((r.status, r.code().as_str()), (StatusCode::UNPROCESSABLE_ENTITY, "TextNotFound"));
    let r = post(&app, "/sessions", json!({"class_texts": ["a jet plane", "a jet plane"]})).await;
    assert_eq!(r.code(), "DuplicateLabel");
}

pub async fn iteration_examples() {
    let (_, app) = app();
    let id = new_session(&app, &["a jet plane"]).await;
    let session = get(&app, &format!("/sessions/{id}")).await.json();
    let base_id = session["classes"][0]["embedding_id"].clone();

    let r = send(&app, Method::POST, &format!("/sessions/{id}/iterations"), "").await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json()["index"], 1);
    assert_eq!(r.json()["embedding_id"], base_id);
    assert_eq!(r.json()["adjustment"]["probe"], true);

    let r = post(&app, &format!("/sessions/{id}/iterations"), json!({"class": "a jet plane", "added": ["fighter jet"]})).await;
    assert_eq!(r.status, StatusCode::OK);
    let body = r.json();
    assert_eq!(body["index"], 2);
    assert_ne!(body["embedding_id"], base_id);
    let labels: Vec<&str> = body["concepts"].as_array().unwrap().iter().map(|c| c["label"].as_str().unwrap()).collect();
    assert!(labels.contains(&"military"));

    let r = post(&app, &format!("/sessions/{id}/iterations"), json!({"unselected": ["nonexistent"]})).await;
    assert_eq!((r.status, r.code().as_str()), (StatusCode::UNPROCESSABLE_ENTITY, "UnknownConcept"));
    let r = post(&app, &format!("/sessions/{id}/iterations"), json!({"class": "tank", "added": ["fighter jet"]})).await;
    assert_eq!((r.status, r.code().as_str()), (StatusCode::NOT_FOUND, "UnknownClass"));
    let r = post(&app, &format!("/sessions/{id}/iterations"), json!({"added": ["   "]})).await;
    assert_eq!(r.code(), "EmptyText");
    assert_eq!(get(&app, &format!("/sessions/{id}")).await.json()["classes"][0]["iterations"].as_array().unwrap().len(), 2);
}

pub async fn similarity_examples() {
    let (_, app) = app();
    let one = new_session(&app, &["a jet plane"]).await;
    let r = get(&app, &format!("/sessions/{one}/similarity")).await;
    assert_eq!((r.status, r.code().as_str()), (StatusCode::CONFLICT, "TooFewClasses"));

    let id = new_session(&app, &["a jet plane", "airliner", "warplane"]).await;
    let before = get(&app, &format!("/sessions/{id}/similarity")).await.json();
    assert_eq!(before["matrix"].as_array().unwrap().len(), 3);
    assert_eq!(before["matrix"][1][1], 1.0);
    assert_eq!(before["matrix"][0][1], before["matrix"][1][0]);
    assert_eq!(before["extremes"].as_array().unwrap().len(), 3);
    let r = post(&app, &format!("/sessions/{id}/iterations"), json!({"class": "a jet plane", "removed": ["passenger windows"]})).await;
    assert_eq!(r.status, StatusCode::OK);
    let after = get(&app, &format!("/sessions/{id}/similarity")).await.json();
    assert_eq!(before["matrix"][1][2], after["matrix"][1][2]);
    assert_ne!(before["matrix"][0][1], after["matrix"][0][1]);
    let r = post(&app, &format!("/sessions/{id}/iterations"), json!({"added": ["fighter jet"]})).await;
    assert_eq!(r.code(), "ClassRequired");
}

pub async fn evaluate_examples() {
    let (_, app) = app();
    let id = new_session(&app, &["a jet plane"]).await;
    let r = post(&app, "/datasets", two_image_upload()).await;
    assert_eq!(r.status, StatusCode::CREATED);
    let ds = r.json()["dataset_id"].as_str().unwrap().to_owned();
    for (mode, expected) in [("modified", 0.5), ("standard", 1.0)] {
        let r = post(&app, &format!("/sessions/{id}/evaluate"), json!({"dataset_id": ds, "mode": mode, "thresholds": [0.5]})).await;
        assert_eq!(r.status, StatusCode::OK, "{:?}", r.json());
        assert_eq!(r.json()["map"].as_f64().unwrap(), expected);
        assert_eq!(r.json()["mode"], mode);
    }
    let session = get(&app, &format!("/sessions/{id}")).await.json();
    assert_eq!(session["classes"][0]["baseline"]["eval"]["map"], 1.0);

    let r = post(&app, &format!("/sessions/{id}/evaluate"), json!({"dataset_id": "missing"})).await;
    assert_eq!((r.status, r.code().as_str()), (StatusCode::NOT_FOUND, "UnknownDataset"));

    // features identical to the class embedding: every target found, no distractors
    let session = get(&app, &format!("/sessions/{id}")).await.json();
    let feature = session["classes"][0]["current_embedding"].clone();
    let mut other = vec![0.0; DIM];
    other[15] = 1.0;
    let synthetic = json!({
        "ground_truth": {
            "images": [{"id": 1}, {"id": 2}, {"id": 3}],
            "annotations": [
                {"image_id": 1, "category": "fighter jet", "bbox": [1, 1, 20, 20], "feature": feature},
                {"image_id": 2, "category": "fighter jet", "bbox": [5, 5, 20, 20], "feature": feature},
                {"image_id": 3, "category": "airplane", "bbox": [5, 5, 20, 20], "feature": other}
            ]
        },
        "category": "fighter jet",
        "score_floor": 0.5
    });
    let ds = post(&app, "/datasets", synthetic).await.json()["dataset_id"].as_str().unwrap().to_owned();
    let r = post(&app, &format!("/sessions/{id}/evaluate"), json!({"dataset_id": ds})).await;
    assert_eq!(r.status, StatusCode::OK);
    let report = r.json();
    assert_eq!(report["map"], 1.0);
    assert_eq!(report["fp"], json!(vec![0; 10]));
    assert_eq!(report["fn"], json!(vec![0; 10]));

    let r = post(&app, &format!("/sessions/{id}/evaluate"), json!({"dataset_id": ds, "category": "tank"})).await;
    assert_eq!(r.code(), "NoGroundTruth");
    let r = post(&app, &format!("/sessions/{id}/evaluate"), json!({"dataset_id": ds, "thresholds": [1.5]})).await;
    assert_eq!(r.code(), "InvalidThreshold");
}

pub async fn get_undo_export_examples() {
    let (_, app) = app();
    let r = get(&app, "/sessions/00000000-0000-0000-0000-000000000000").await;
    assert_eq!((r.status, r.code().as_str()), (StatusCode::NOT_FOUND, "UnknownSession"));
    let r = get(&app, "/sessions/not-a-uuid").await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);

    let id = new_session(&app, &["a jet plane"]).await;
    let r = send(&app, Method::POST, &format!("/sessions/{id}/undo"), "").await;
    assert_eq!((r.status, r.code().as_str()), (StatusCode::CONFLICT, "NothingToUndo"));

    let base = get(&app, &format!("/sessions/{id}")).await.json()["classes"][0]["current_embedding"].clone();
    post(&app, &format!("/sessions/{id}/iterations"), json!({"added": ["fighter jet"]})).await;
    let r = send(&app, Method::POST, &format!("/sessions/{id}/export"), "").await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.content_type.as_deref(), Some("application/octet-stream"));
    let def = decode_definition(&r.bytes).unwrap();
    assert_eq!(def.label, "a jet plane");
    assert_eq!(def.history.len(), 1);
    let current = get(&app, &format!("/sessions/{id}")).await.json()["classes"][0]["current_embedding"].clone();
    let expected: Vec<f32> = current.as_array().unwrap().iter().map(|v| v.as_f64().unwrap() as f32).collect();
    assert_eq!(def.embedding, expected);

    let r = send(&app, Method::POST, &format!("/sessions/{id}/undo"), "").await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json()["current_embedding"], base);
    assert_eq!(r.json()["iterations"], json!([]));
}

pub async fn get_session_equals_in_process_replay() {
    let (state, app) = app();
    let id = new_session(&app, &["a jet plane", "airliner"]).await;
    let ops: Vec<Value> = vec![
        json!({"class": "a jet plane", "added": ["fighter jet"], "removed": ["propeller"]}),
        json!({"class": "a jet plane", "unselected": ["another", "seen"]}),
        json!({"class": "airliner", "added": ["passenger windows"], "weights": {"lambda_add": 0.5, "lambda_sub": 0.1}}),
        json!({"class": "a jet plane"}),
    ];
    for op in &ops {
        assert_eq!(post(&app, &format!("/sessions/{id}/iterations"), op.clone()).await.status, StatusCode::OK);
    }
    send(&app, Method::POST, &format!("/sessions/{id}/undo"), json!({"class": "a jet plane"}).to_string()).await;
    let served = get(&app, &format!("/sessions/{id}")).await.json();

    let slot = state.slot(&id).unwrap();
    let replayed = state.engine.replay(slot.snapshot().events()).unwrap();
    let view = serde_json::to_value(views::session(&replayed, state.engine.dictionary(), 10)).unwrap();
    assert_eq!(served, view);

    // the same sequence run directly against the engine
    let engine = engine();
    let source = store();
    let mut s = engine.create_session(&["a jet plane", "airliner"], &source, AdjustmentWeights::default()).unwrap();
    let w = AdjustmentWeights::default();
    let steps = [
        ("a jet plane", FeedbackAdjustment::new(vec!["fighter jet".into()], vec!["propeller".into()], BTreeSet::new(), w).unwrap()),
        ("a jet plane", FeedbackAdjustment::new(vec![], vec![], ["another".to_string(), "seen".to_string()].into(), w).unwrap()),
        ("airliner", FeedbackAdjustment::new(vec!["passenger windows".into()], vec![], BTreeSet::new(), AdjustmentWeights::new(0.5, 0.1).unwrap()).unwrap()),
        ("a jet plane", FeedbackAdjustment::probe(w)),
    ];
    for (label, adj) in steps {
        engine.apply_feedback(&mut s, label, adj, &source).unwrap();
    }
    engine.undo(&mut s, "a jet plane").unwrap();
    let mut local = serde_json::to_value(views::session(&s, engine.dictionary(), 10)).unwrap();
    local["session_id"] = served["session_id"].clone();
    local["created_at"] = served["created_at"].clone();
    assert_eq!(served, local);
}

pub async fn sessions_survive_restart() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = app_with_logs(dir.path().to_path_buf());
    let id = new_session(&app, &["a jet plane", "airliner"]).await;
    post(&app, &format!("/sessions/{id}/iterations"), json!({"class": "airliner", "removed": ["propeller"]})).await;
    post(&app, &format!("/sessions/{id}/iterations"), json!({"class": "a jet plane", "unselected": ["another"]})).await;
    let ds = post(&app, "/datasets", two_image_upload()).await.json()["dataset_id"].as_str().unwrap().to_owned();
    post(&app, &format!("/sessions/{id}/evaluate"), json!({"dataset_id": ds, "class": "a jet plane"})).await;
    send(&app, Method::POST, &format!("/sessions/{id}/export"), json!({"class": "airliner"}).to_string()).await;
    let before = get(&app, &format!("/sessions/{id}")).await.json();
    drop(app);

    let (state, app) = app_with_logs(dir.path().to_path_buf());
    assert_eq!(state.session_count(), 1);
    assert_eq!(get(&app, &format!("/sessions/{id}")).await.json(), before);
    let r = post(&app, &format!("/sessions/{id}/evaluate"), json!({"dataset_id": ds, "class": "a jet plane"})).await;
    assert_eq!(r.status, StatusCode::OK);
    let log = std::fs::read_to_string(dir.path().join(format!("{id}.jsonl"))).unwrap();
    let kinds: Vec<String> = log
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap()["event"].as_str().unwrap().to_owned())
        .collect();
    assert_eq!(
        kinds,
        ["session_created", "feedback_applied", "feedback_applied", "evaluation_attached", "export", "evaluation_attached"]
    );
}

pub async fn concurrent_mutations_are_serialized() {
    let (state, app) = app();
    let id = new_session(&app, &["a jet plane"]).await;
    let mut handles = Vec::new();
    for i in 0..24 {
        let app = app.clone();
        let uri = format!("/sessions/{id}/iterations");
        let body = if i % 2 == 0 { json!({"added": ["fighter jet"]}) } else { json!({"removed": ["propeller"]}) };
        handles.push(tokio::spawn(async move { post(&app, &uri, body).await }));
    }
    let mut indices = Vec::new();
    for h in handles {
        let r = h.await.unwrap();
        assert_eq!(r.status, StatusCode::OK);
        indices.push(r.json()["index"].as_u64().unwrap());
    }
    indices.sort();
    assert_eq!(indices, (1..=24).collect::<Vec<_>>());
    let slot = state.slot(&id).unwrap();
    let snap = slot.snapshot();
    assert_eq!(state.engine.replay(snap.events()).unwrap(), *snap);
}

pub async fn oversized_upload_is_rejected() {
    let state = state_with(ServiceConfig {
        max_upload_bytes: 1024,
        ..Default::default()
    });
    let app = router(state);
    let big = json!({"ground_truth": {"images": [], "annotations": []}, "category": "x".repeat(4096)});
    let r = post(&app, "/datasets", big).await;
    assert_eq!((r.status, r.code().as_str()), (StatusCode::PAYLOAD_TOO_LARGE, "PayloadTooLarge"));
}

pub async fn unknown_routes_and_methods_are_mapped() {
    let (_, app) = app();
    let r = get(&app, "/nowhere").await;
    assert_eq!((r.status, r.code().as_str()), (StatusCode::NOT_FOUND, "NotFound"));
    let r = get(&app, "/sessions").await;
    assert_eq!((r.status, r.code().as_str()), (StatusCode::METHOD_NOT_ALLOWED, "MethodNotAllowed"));
    let r = send(&app, Method::POST, "/sessions", "{\"class_texts\": [").await;
    assert_eq!((r.status, r.code().as_str()), (StatusCode::BAD_REQUEST, "MalformedBody"));
    let r = send(&app, Method::POST, "/sessions", "[1, 2]").await;
    assert_eq!((r.status, r.code().as_str()), (StatusCode::UNPROCESSABLE_ENTITY, "InvalidBody"));
    let r = post(&app, "/sessions", json!({"class_texts": ["a jet plane"], "extra": true})).await;
    assert_eq!(r.status, StatusCode::CREATED);
}
