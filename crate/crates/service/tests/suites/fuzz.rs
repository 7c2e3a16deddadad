use axum::http::{Method, StatusCode};
use classrefine_service::ERROR_CODES;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::support::*;

const FIELDS: [&str; 16] = [
    "class_texts", "weights", "lambda_add", "lambda_sub", "class", "added", "removed", "unselected", "dataset_id",
    "mode", "thresholds", "ground_truth", "detections", "category", "score_floor", "jitter",
];

fn random_string(rng: &mut ChaCha8Rng) -> String {
    let pool = ["", " ", "a jet plane", "fighter jet", "jet", "another", "modified", "standard", "\u{0}", "é", "NaN", "1e999"];
    if rng.random_bool(0.7) {
        pool[rng.random_range(0..pool.len())].to_owned()
    } else {
        (0..rng.random_range(0..12)).map(|_| rng.random_range(' '..='~')).collect()
    }
}

fn random_value(rng: &mut ChaCha8Rng, depth: u32) -> Value {
    match rng.random_range(0..if depth == 0 { 5 } else { 7 }) {
        0 => Value::Null,
        1 => json!(rng.random_bool(0.5)),
        2 => json!(rng.random_range(-3.0..3.0)),
        3 => [json!(-1e308), json!(0), json!(1), json!(2), json!(1e308), json!(-0.0), json!(u64::MAX)][rng.random_range(0..7)].clone(),
        4 => json!(random_string(rng)),
        5 => Value::Array((0..rng.random_range(0..4)).map(|_| random_value(rng, depth - 1)).collect()),
        _ => random_object(rng, depth - 1),
    }
}

fn random_object(rng: &mut ChaCha8Rng, depth: u32) -> Value {
    let mut m = Map::new();
    for _ in 0..rng.random_range(0..5) {
        let key = if rng.random_bool(0.85) {
            FIELDS[rng.random_range(0..FIELDS.len())].to_owned()
        } else {
            random_string(rng)
        };
        m.insert(key, random_value(rng, depth));
    }
    Value::Object(m)
}

fn valid_bodies(ds: &str) -> Vec<Value> {
    vec![
        json!({"class_texts": ["a jet plane"], "weights": {"lambda_add": 0.3, "lambda_sub": 0.3}}),
        json!({"added": ["fighter jet"], "removed": ["propeller"], "unselected": ["another"]}),
        json!({"dataset_id": ds, "mode": "standard", "thresholds": [0.5, 0.75]}),
        two_image_upload(),
    ]
}

fn malformed(rng: &mut ChaCha8Rng, ds: &str) -> Vec<u8> {
    let valid = valid_bodies(ds);
    let base = valid[rng.random_range(0..valid.len())].to_string().into_bytes();
    match rng.random_range(0..6) {
        0 => (0..rng.random_range(0..64)).map(|_| rng.random()).collect(),
        1 => base[..rng.random_range(0..base.len())].to_vec(),
        2 => {
            let mut b = base;
            let i = rng.random_range(0..b.len());
            b[i] = rng.random_range(0x20..0x7f);
            b
        }
        3 => random_object(rng, 3).to_string().into_bytes(),
        4 => random_value(rng, 3).to_string().into_bytes(),
        _ => {
            let mut v: Value = serde_json::from_slice(&base).unwrap();
            let obj = v.as_object_mut().unwrap();
            let key = obj.keys().nth(rng.random_range(0..obj.len())).unwrap().clone();
            obj.insert(key, random_value(rng, 2));
            v.to_string().into_bytes()
        }
    }
}

pub async fn malformed_bodies_only_yield_mapped_errors() {
    let (_, app) = app();
    let id = new_session(&app, &["a jet plane", "airliner"]).await;
    let single = new_session(&app, &["a jet plane"]).await;
    let ds = post(&app, "/datasets", two_image_upload()).await.json()["dataset_id"].as_str().unwrap().to_owned();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut seen = std::collections::BTreeMap::<String, usize>::new();
    for case in 0..1000 {
        let sid = if rng.random_bool(0.5) { &id } else { &single };
        let uri = match rng.random_range(0..6) {
            0 => "/sessions".to_owned(),
            1 => format!("/sessions/{sid}/iterations"),
            2 => format!("/sessions/{sid}/evaluate"),
            3 => format!("/sessions/{sid}/undo"),
            4 => format!("/sessions/{sid}/export"),
            _ => "/datasets".to_owned(),
        };
        let body = malformed(&mut rng, &ds);
        let r = send(&app, Method::POST, &uri, body.clone()).await;
        assert_ne!(r.status, StatusCode::INTERNAL_SERVER_ERROR, "case {case}: {uri} {:?}", String::from_utf8_lossy(&body));
        if r.status.is_success() {
            continue;
        }
        let v: Value = serde_json::from_slice(&r.bytes)
            .unwrap_or_else(|_| panic!("case {case}: non-JSON error body for {uri}"));
        let code = v["code"].as_str().unwrap_or_default().to_owned();
        assert!(ERROR_CODES.contains(&code.as_str()), "case {case}: unmapped code {code:?}");
        assert!(v["message"].is_string());
        *seen.entry(format!("{} {code}", r.status.as_u16())).or_default() += 1;
    }
    assert!(seen.keys().any(|k| k.ends_with("MalformedBody")));
    assert!(seen.keys().any(|k| k.ends_with("InvalidBody")));
}
