//! Run the HTTP API over a freshly trained model on an ephemeral port,
//! query it once over the network, and shut down.

use ortg_lab::ingest::{generate_synthetic_dataset, SyntheticSpec};
use ortg_lab::model::{ModelSpec, TrainConfig, TrainedPredictor};
use ortg_lab::service::{predict_body, router, AppState};

#[tokio::main]
async fn main() {
    let (data, _) = generate_synthetic_dataset(7, 120, &SyntheticSpec::default()).unwrap();
    let model = TrainedPredictor::fit(&data, &ModelSpec::Linear, 18, &TrainConfig::default()).unwrap();
    let row = data.rows()[0].clone();
    let expected = model.predict(&row.features);

    let app = router(AppState::new(model, data, None).unwrap(), None).unwrap();
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    println!("serving on http://{addr}");

    let body = predict_body(row.features.values());
    let reply = tokio::task::spawn_blocking(move || {
        reqwest::blocking::Client::new()
            .post(format!("http://{addr}/api/predict"))
            .header("content-type", "application/json")
            .body(body)
            .send()
            .and_then(|r| r.text())
            .unwrap()
    })
    .await
    .unwrap();
    let v: serde_json::Value = serde_json::from_str(&reply).unwrap();
    println!("POST /api/predict -> {reply}");
    assert_eq!(v["ortg"].as_f64().unwrap(), expected);
}
