use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use ortg_lab::features::{FEATURE_COUNT, FEATURE_NAMES};
use ortg_lab::ingest::{generate_synthetic_dataset, Dataset, SyntheticSpec};
use ortg_lab::model::{ModelSpec, TrainConfig, TrainedPredictor};
use ortg_lab::optimize::{plan_document, OptimizeConfig};
use ortg_lab::service::{predict_body, resolve_port, router, AppState, DEFAULT_PORT};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

fn fixture(spec: ModelSpec) -> (TrainedPredictor, Dataset) {
    let (data, _) = generate_synthetic_dataset(7, 60, &SyntheticSpec::default()).unwrap();
    let cfg = TrainConfig {
        max_epochs: 200,
        restarts: 2,
        ..TrainConfig::with_seed(3)
    };
    (TrainedPredictor::fit(&data, &spec, 18, &cfg).unwrap(), data)
}

fn app(spec: ModelSpec) -> (Router, TrainedPredictor, Dataset) {
    let (p, data) = fixture(spec);
    let state = AppState::new(p.clone(), data.clone(), None).unwrap();
    (router(state, None).unwrap(), p, data)
}

async fn call(app: &Router, method: &str, path: &str, body: &str) -> (StatusCode, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(path)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    (status, bytes.to_vec())
}

async fn call_json(app: &Router, method: &str, path: &str, body: &str) -> (StatusCode, Value) {
    let (status, bytes) = call(app, method, path, body).await;
    (status, serde_json::from_slice(&bytes).unwrap())
}

#[tokio::test]
async fn predict_matches_in_process_prediction_bit_for_bit() {
    for spec in [ModelSpec::Linear, ModelSpec::mlp(&[3])] {
        let (app, p, _) = app(spec);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let mut x = [0.0; FEATURE_COUNT];
            for v in &mut x {
                *v = rng.random_range(0.0..=1.0);
            }
            let (status, body) = call_json(&app, "POST", "/api/predict", &predict_body(&x)).await;
            assert_eq!(status, StatusCode::OK, "{body}");
            let expected = p.predict_raw(&x).unwrap();
            assert_eq!(body["ortg"].as_f64().unwrap().to_bits(), expected.to_bits());
            assert_eq!(body["normalized"].as_f64().unwrap().to_bits(), p.predict_normalized(&x).to_bits());
        }
    }
}

#[tokio::test]
async fn preset_rows_predict_in_region() {
    let (app, p, data) = app(ModelSpec::Linear);
    let row = &data.rows()[0];
    let (status, body) = call_json(&app, "POST", "/api/predict", &predict_body(row.features.values())).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["out_of_region"], json!([]));
    assert_eq!(body["ortg"].as_f64().unwrap(), p.predict(&row.features));

    let (status, presets) = call_json(&app, "GET", "/api/presets", "").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(presets.as_array().unwrap().len(), data.len());
    assert_eq!(presets[0]["team"], json!(row.team));
}

fn full_body() -> serde_json::Map<String, Value> {
    FEATURE_NAMES.iter().map(|n| (n.to_string(), json!(0.1))).collect()
}

#[tokio::test]
async fn predict_schema_violations() {
    let (app, _, _) = app(ModelSpec::Linear);

    let mut unknown = full_body();
    unknown.insert("dunk_freq".into(), json!(0.1));
    let (s, b) = call_json(&app, "POST", "/api/predict", &Value::Object(unknown).to_string()).await;
    assert_eq!((s, b["code"].as_str().unwrap()), (StatusCode::BAD_REQUEST, "unknown_feature"));
    assert_eq!(b["field"], json!("dunk_freq"));

    let mut missing = full_body();
    missing.remove("cut_tov_freq");
    let (s, b) = call_json(&app, "POST", "/api/predict", &Value::Object(missing).to_string()).await;
    assert_eq!((s, b["code"].as_str().unwrap()), (StatusCode::BAD_REQUEST, "missing_feature"));
    assert_eq!(b["field"], json!("cut_tov_freq"));

    let mut text = full_body();
    text.insert("iso_freq".into(), json!("0.2"));
    let (s, b) = call_json(&app, "POST", "/api/predict", &Value::Object(text).to_string()).await;
    assert_eq!((s, b["code"].as_str().unwrap()), (StatusCode::BAD_REQUEST, "not_a_number"));

    let mut outside = full_body();
    outside.insert("iso_freq".into(), json!(1.5));
    let (s, b) = call_json(&app, "POST", "/api/predict", &Value::Object(outside).to_string()).await;
    assert_eq!((s, b["code"].as_str().unwrap()), (StatusCode::UNPROCESSABLE_ENTITY, "out_of_unit_interval"));
    assert_eq!(b["status"], json!(422));

    let mut negative = full_body();
    negative.insert("postup_fg_pct".into(), json!(-0.01));
    let (s, _) = call_json(&app, "POST", "/api/predict", &Value::Object(negative).to_string()).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);

    for bad in ["{", "[1,2]", "", "null"] {
        let (s, b) = call_json(&app, "POST", "/api/predict", bad).await;
        assert_eq!(s, StatusCode::BAD_REQUEST, "body {bad:?}");
        assert_eq!(b["code"], json!("malformed_json"));
    }
}

#[tokio::test]
async fn out_of_region_features_are_flagged_not_rejected() {
    let (app, _, _) = app(ModelSpec::Linear);
    let mut body = full_body();
    body.insert("iso_freq".into(), json!(0.9));
    let (s, b) = call_json(&app, "POST", "/api/predict", &Value::Object(body).to_string()).await;
    assert_eq!(s, StatusCode::OK);
    assert!(b["out_of_region"].as_array().unwrap().contains(&json!("iso_freq")));
}

#[tokio::test]
async fn optimize_returns_the_shared_gameplan_document() {
    let (app, p, data) = app(ModelSpec::Linear);
    let (status, bytes) = call(&app, "POST", "/api/optimize", r#"{"locked":{"iso_freq":0.08},"seed":5}"#).await;
    assert_eq!(status, StatusCode::OK);
    let key = "iso_freq".parse().unwrap();
    let (_, doc) = plan_document(&p, &data, 0.0, &[(key, 0.08)], &OptimizeConfig::with_seed(5)).unwrap();
    assert_eq!(String::from_utf8(bytes).unwrap(), doc);
    let v: Value = serde_json::from_str(&doc).unwrap();
    assert_eq!(v["features"]["iso_freq"], json!(0.08));
    assert_eq!(v["hypothesis_checks"]["checks"].as_array().unwrap().len(), 4);
}

#[tokio::test]
async fn optimize_errors() {
    let (app, _, _) = app(ModelSpec::Linear);
    let (s, b) = call_json(&app, "POST", "/api/optimize", r#"{"locked":{"iso_freq":0.99}}"#).await;
    assert_eq!((s, b["code"].as_str().unwrap()), (StatusCode::UNPROCESSABLE_ENTITY, "locked_conflict"));
    assert_eq!(b["field"], json!("iso_freq"));

    let (s, b) = call_json(&app, "POST", "/api/optimize", r#"{"restarts":3}"#).await;
    assert_eq!((s, b["code"].as_str().unwrap()), (StatusCode::BAD_REQUEST, "unknown_field"));

    let (s, b) = call_json(&app, "POST", "/api/optimize", r#"{"locked":{"bogus":0.1}}"#).await;
    assert_eq!((s, b["code"].as_str().unwrap()), (StatusCode::BAD_REQUEST, "unknown_feature"));

    let (s, b) = call_json(&app, "POST", "/api/optimize", r#"{"margin":-1}"#).await;
    assert_eq!((s, b["code"].as_str().unwrap()), (StatusCode::BAD_REQUEST, "invalid_argument"));
}

#[tokio::test]
async fn read_only_endpoints() {
    let (app, p, _) = app(ModelSpec::mlp(&[3]));
    let (s, b) = call_json(&app, "GET", "/api/health", "").await;
    assert_eq!((s, b), (StatusCode::OK, json!({"status": "ok"})));

    let (s, b) = call_json(&app, "GET", "/api/model", "").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(b["kind"], json!("mlp"));
    assert_eq!(b["shape"], json!([18, 3, 1]));
    assert_eq!(b["dataset_fingerprint"], json!(p.metadata().dataset_fingerprint));

    let (s, b) = call_json(&app, "GET", "/api/sensitivity", "").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(b["entries"].as_array().unwrap().len(), FEATURE_COUNT);

    let (s, b) = call_json(&app, "GET", "/api/nothing", "").await;
    assert_eq!((s, b["code"].as_str().unwrap()), (StatusCode::NOT_FOUND, "not_found"));

    let (s, b) = call_json(&app, "GET", "/api/predict", "").await;
    assert_eq!((s, b["code"].as_str().unwrap()), (StatusCode::METHOD_NOT_ALLOWED, "method_not_allowed"));

    let (s, page) = call(&app, "GET", "/", "").await;
    assert_eq!(s, StatusCode::OK);
    assert!(String::from_utf8(page).unwrap().contains("/api/predict"));
}

#[test]
fn port_resolution_order() {
    assert_eq!(resolve_port(Some(9000), Some("9100")).unwrap(), 9000);
    assert_eq!(resolve_port(None, Some("9100")).unwrap(), 9100);
    assert_eq!(resolve_port(None, None).unwrap(), DEFAULT_PORT);
    assert!(resolve_port(None, Some("http")).is_err());
}
