//! Read-only HTTP API over a loaded predictor and dataset.
//!
//! Routes:
//!
//! | method | path               | body                                         |
//! |--------|--------------------|----------------------------------------------|
//! | GET    | `/api/health`      | `{"status":"ok"}`                            |
//! | GET    | `/api/model`       | kind, shape, k, fingerprint, loss, region    |
//! | POST   | `/api/predict`     | 48 named features → `ortg`, `normalized`, `out_of_region` |
//! | POST   | `/api/optimize`    | `{locked, margin, seed}` → gameplan document |
//! | GET    | `/api/sensitivity` | sensitivity report                           |
//! | GET    | `/api/presets`     | dataset rows                                 |
//! | GET    | `/`                | UI assets                                    |
//!
//! Every error response is `{"status", "code", "message", "field"}`.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::State;
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::Serialize;
use serde_json::{json, Map, Value};
use tower_http::cors::{AllowOrigin, CorsLayer};
use tower_http::services::ServeDir;

use crate::features::{named_map, FeatureKey, FEATURE_COUNT, FEATURE_NAMES};
use crate::ingest::Dataset;
use crate::model::TrainedPredictor;
use crate::optimize::{derive_feasible_region, plan_document, sensitivity_rank, FeasibleRegion, OptimizeConfig, OptimizeError};

/// Port used when neither `--port` nor `ORTG_LAB_PORT` is given.
pub const DEFAULT_PORT: u16 = 8080;
pub const PORT_ENV: &str = "ORTG_LAB_PORT";

/// Flag wins over environment, environment over [`DEFAULT_PORT`].
pub fn resolve_port(flag: Option<u16>, env: Option<&str>) -> Result<u16, String> {
    if let Some(p) = flag {
        return Ok(p);
    }
    match env {
        Some(v) => v.trim().parse().map_err(|_| format!("{PORT_ENV}={v:?} is not a valid port")),
        None => Ok(DEFAULT_PORT),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub field: Option<String>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>, field: Option<&str>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            field: field.map(str::to_string),
        }
    }

    fn bad_request(code: &'static str, message: impl Into<String>, field: Option<&str>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message, field)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({
            "status": self.status.as_u16(),
            "code": self.code,
            "message": self.message,
            "field": self.field,
        });
        (self.status, [(header::CONTENT_TYPE, "application/json")], body.to_string()).into_response()
    }
}

/// Immutable state shared by all handlers.
pub struct AppState {
    predictor: TrainedPredictor,
    data: Dataset,
    region: FeasibleRegion,
    model_json: String,
    sensitivity_json: String,
    presets_json: String,
    static_dir: Option<PathBuf>,
}

impl AppState {
    /// Precompute everything that depends only on the model and data.
    pub fn new(predictor: TrainedPredictor, data: Dataset, static_dir: Option<PathBuf>) -> Result<Self, OptimizeError> {
        let region = derive_feasible_region(&data, 0.0)?;
        let sensitivity_json = sensitivity_rank(&predictor, &data)?.to_json();
        let md = predictor.metadata();
        let spec = predictor.spec();
        let model_json = json!({
            "kind": spec.kind(),
            "shape": spec.layer_sizes(predictor.pipeline().n_components()),
            "k": predictor.pipeline().n_components(),
            "dataset_fingerprint": md.dataset_fingerprint,
            "final_loss": md.final_loss,
            "seed": md.seed,
            "created_at": md.created_at,
            "region": region,
        })
        .to_string();
        let presets: Vec<Value> = data
            .rows()
            .iter()
            .map(|r| json!({"season": r.season, "team": r.team, "ortg": r.ortg, "features": r.features}))
            .collect();
        let presets_json = Value::Array(presets).to_string();
        Ok(Self {
            predictor,
            data,
            region,
            model_json,
            sensitivity_json,
            presets_json,
            static_dir,
        })
    }

    pub fn predictor(&self) -> &TrainedPredictor {
        &self.predictor
    }
}

type Shared = Arc<AppState>;

fn json_response(body: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn parse_object(body: Result<Bytes, BytesRejection>) -> Result<Map<String, Value>, ApiError> {
    let bytes = body.map_err(|e| ApiError::bad_request("bad_body", e.body_text(), None))?;
    match serde_json::from_slice::<Value>(&bytes) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(ApiError::bad_request("malformed_json", "request body must be a JSON object", None)),
        Err(e) => Err(ApiError::bad_request("malformed_json", format!("invalid JSON: {e}"), None)),
    }
}

fn number(value: &Value, field: &str) -> Result<f64, ApiError> {
    value
        .as_f64()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ApiError::bad_request("not_a_number", format!("`{field}` must be a finite number"), Some(field)))
}

/// Validate a predict body: exactly the 48 canonical names, finite numbers in `[0, 1]`.
pub fn parse_feature_request(map: &Map<String, Value>) -> Result<[f64; FEATURE_COUNT], ApiError> {
    if let Some(name) = map.keys().find(|k| k.parse::<FeatureKey>().is_err()) {
        return Err(ApiError::bad_request("unknown_feature", format!("unknown feature `{name}`"), Some(name)));
    }
    let mut x = [0.0; FEATURE_COUNT];
    for (j, name) in FEATURE_NAMES.iter().enumerate() {
        let value = map
            .get(*name)
            .ok_or_else(|| ApiError::bad_request("missing_feature", format!("missing feature `{name}`"), Some(name)))?;
        x[j] = number(value, name)?;
    }
    for (j, name) in FEATURE_NAMES.iter().enumerate() {
        if !(0.0..=1.0).contains(&x[j]) {
            return Err(ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "out_of_unit_interval",
                format!("`{name}` = {} is outside [0, 1]", x[j]),
                Some(name),
            ));
        }
    }
    Ok(x)
}

async fn health() -> Response {
    json_response(json!({"status": "ok"}).to_string())
}

async fn model_info(State(s): State<Shared>) -> Response {
    json_response(s.model_json.clone())
}

async fn sensitivity(State(s): State<Shared>) -> Response {
    json_response(s.sensitivity_json.clone())
}

async fn presets(State(s): State<Shared>) -> Response {
    json_response(s.presets_json.clone())
}

async fn predict(State(s): State<Shared>, body: Result<Bytes, BytesRejection>) -> Result<Response, ApiError> {
    let x = parse_feature_request(&parse_object(body)?)?;
    let p = &s.predictor;
    let normalized = p.predict_normalized(&x);
    let ortg = p.pipeline().denormalize_target(normalized);
    let out: Vec<&str> = s.region.out_of_bounds(&x).into_iter().map(FeatureKey::name).collect();
    Ok(json_response(json!({"ortg": ortg, "normalized": normalized, "out_of_region": out}).to_string()))
}

fn optimize_error(e: OptimizeError) -> ApiError {
    match e {
        OptimizeError::LockedConflict { key, .. } => {
            ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "locked_conflict", e.to_string(), Some(key.name()))
        }
        OptimizeError::LockedFreqSum { .. } => {
            ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "locked_conflict", e.to_string(), None)
        }
        OptimizeError::Argument(msg) => ApiError::bad_request("invalid_argument", msg, None),
    }
}

/// Parsed `/api/optimize` body.
pub struct OptimizeRequest {
    pub locked: Vec<(FeatureKey, f64)>,
    pub margin: f64,
    pub seed: u64,
}

pub fn parse_optimize_request(map: &Map<String, Value>) -> Result<OptimizeRequest, ApiError> {
    if let Some(k) = map.keys().find(|k| !matches!(k.as_str(), "locked" | "margin" | "seed")) {
        return Err(ApiError::bad_request("unknown_field", format!("unknown field `{k}`"), Some(k)));
    }
    let mut locked = Vec::new();
    match map.get("locked") {
        None | Some(Value::Null) => {}
        Some(Value::Object(entries)) => {
            for (name, value) in entries {
                let key = name.parse::<FeatureKey>().map_err(|_| {
                    ApiError::bad_request("unknown_feature", format!("unknown feature `{name}`"), Some(name))
                })?;
                locked.push((key, number(value, name)?));
            }
        }
        Some(_) => return Err(ApiError::bad_request("malformed_json", "`locked` must be an object", Some("locked"))),
    }
    let margin = match map.get("margin") {
        None | Some(Value::Null) => 0.0,
        Some(v) => number(v, "margin")?,
    };
    let seed = match map.get("seed") {
        None | Some(Value::Null) => 0,
        Some(v) => v
            .as_u64()
            .ok_or_else(|| ApiError::bad_request("not_a_number", "`seed` must be a nonnegative integer", Some("seed")))?,
    };
    Ok(OptimizeRequest { locked, margin, seed })
}

async fn optimize(State(s): State<Shared>, body: Result<Bytes, BytesRejection>) -> Result<Response, ApiError> {
    let req = parse_optimize_request(&parse_object(body)?)?;
    let doc = tokio::task::spawn_blocking(move || {
        let cfg = OptimizeConfig::with_seed(req.seed);
        plan_document(&s.predictor, &s.data, req.margin, &req.locked, &cfg).map(|(_, doc)| doc)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string(), None))?
    .map_err(optimize_error)?;
    Ok(json_response(doc))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route", None)
}

async fn method_not_allowed() -> ApiError {
    ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "method_not_allowed", "method not allowed on this route", None)
}

const FALLBACK_PAGE: &str = "<!doctype html>
<html><head><meta charset=\"utf-8\"><title>ortg-lab</title></head>
<body><h1>ortg-lab</h1>
<p>The API is running. Endpoints: <code>/api/health</code>, <code>/api/model</code>,
<code>/api/predict</code>, <code>/api/optimize</code>, <code>/api/sensitivity</code>, <code>/api/presets</code>.</p>
</body></html>
";

/// Build the application router. `allow_origin` widens CORS beyond same-origin;
/// `*` allows any origin.
pub fn router(state: AppState, allow_origin: Option<&str>) -> Result<Router, String> {
    let static_dir = state.static_dir.clone();
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/model", get(model_info))
        .route("/api/predict", post(predict))
        .route("/api/optimize", post(optimize))
        .route("/api/sensitivity", get(sensitivity))
        .route("/api/presets", get(presets))
        .route("/api/{*rest}", get(not_found).post(not_found))
        .method_not_allowed_fallback(method_not_allowed)
        .with_state(Arc::new(state));
    let mut app = match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(FALLBACK_PAGE) })).fallback(not_found),
    };
    if let Some(origin) = allow_origin {
        let allow = if origin == "*" {
            AllowOrigin::any()
        } else {
            let value = HeaderValue::from_str(origin).map_err(|_| format!("invalid origin {origin:?}"))?;
            AllowOrigin::exact(value)
        };
        app = app.layer(
            CorsLayer::new()
                .allow_origin(allow)
                .allow_methods([Method::GET, Method::POST])
                .allow_headers([header::CONTENT_TYPE]),
        );
    }
    Ok(app)
}

/// Serve `app` on `addr` until interrupted.
pub async fn serve(app: Router, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// Features of a dataset row as a predict request body.
pub fn predict_body(x: &[f64; FEATURE_COUNT]) -> String {
    serde_json::to_string(&named_map(x)).expect("features serialize")
}
