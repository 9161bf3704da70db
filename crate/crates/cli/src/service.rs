//! HTTP service backing the correction UI.
//!
//! Sessions live in memory only; a restart forgets them. Each session keeps
//! the uploaded raster, the current result and an undo stack of earlier
//! results. Corrections and undos on one session are serialised by a
//! per-session lock; uploads segment on the blocking pool, so distinct
//! sessions run in parallel.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path as UrlPath, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use choroidseg_core::scan_io::decode_scan;
use choroidseg_core::{
    segment, Error as CoreError, Layer, PipelineConfig, Point, SegmentationResult,
};
use serde::Serialize;
use serde_json::{json, Value};
use tokio::sync::Mutex;
use tower_http::services::ServeDir;
use tower_http::trace::TraceLayer;

pub const DEFAULT_MAX_UPLOAD_BYTES: usize = 32 << 20;

#[derive(Debug, Clone)]
pub struct ServiceOptions {
    pub config: PipelineConfig,
    pub max_upload_bytes: usize,
    /// Static files served at `/`.
    pub ui_dir: Option<PathBuf>,
    /// Write-through copy of every result revision.
    pub results_dir: Option<PathBuf>,
}

impl Default for ServiceOptions {
    fn default() -> Self {
        Self {
            config: PipelineConfig::default(),
            max_upload_bytes: DEFAULT_MAX_UPLOAD_BYTES,
            ui_dir: None,
            results_dir: None,
        }
    }
}

struct Session {
    scan: Bytes,
    content_type: &'static str,
    result: SegmentationResult,
    history: Vec<SegmentationResult>,
}

/// Session id → session. The map lock is never held across an await.
#[derive(Default)]
pub struct SessionStore {
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
}

impl SessionStore {
    fn insert(&self, session: Session) -> String {
        let mut map = self.sessions.write().expect("session map poisoned");
        loop {
            let id = uuid::Uuid::new_v4().simple().to_string();
            if !map.contains_key(&id) {
                map.insert(id.clone(), Arc::new(Mutex::new(session)));
                return id;
            }
        }
    }

    fn get(&self, id: &str) -> Option<Arc<Mutex<Session>>> {
        self.sessions
            .read()
            .expect("session map poisoned")
            .get(id)
            .cloned()
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("session map poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone)]
struct AppState {
    store: Arc<SessionStore>,
    config: Arc<PipelineConfig>,
    results_dir: Option<Arc<PathBuf>>,
}

#[derive(Debug, Serialize)]
pub struct FieldProblem {
    pub field: String,
    pub problem: String,
}

#[derive(Debug)]
enum ApiError {
    NotFound(String),
    BadUpload(String),
    Unprocessable(String),
    InvalidCorrection(Vec<FieldProblem>),
    Conflict(String),
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::NotFound(id) => (
                StatusCode::NOT_FOUND,
                json!({ "error": format!("unknown session {id}") }),
            ),
            ApiError::BadUpload(msg) => (StatusCode::BAD_REQUEST, json!({ "error": msg })),
            ApiError::Unprocessable(msg) => {
                (StatusCode::UNPROCESSABLE_ENTITY, json!({ "error": msg }))
            }
            ApiError::InvalidCorrection(fields) => (
                StatusCode::UNPROCESSABLE_ENTITY,
                json!({ "error": "invalid correction", "fields": fields }),
            ),
            ApiError::Conflict(msg) => (StatusCode::CONFLICT, json!({ "error": msg })),
            ApiError::Internal(msg) => {
                tracing::error!("{msg}");
                (StatusCode::INTERNAL_SERVER_ERROR, json!({ "error": msg }))
            }
        };
        (status, Json(body)).into_response()
    }
}

/// Builds the application router.
pub fn router(options: ServiceOptions) -> Router {
    let state = AppState {
        store: Arc::new(SessionStore::default()),
        config: Arc::new(options.config),
        results_dir: options.results_dir.map(Arc::new),
    };
    let api = Router::new()
        .route("/api/scans", post(upload))
        .route("/api/scans/{id}", get(scan))
        .route("/api/scans/{id}/result", get(result))
        .route("/api/scans/{id}/corrections", post(correct))
        .route("/api/scans/{id}/undo", post(undo))
        .route("/healthz", get(|| async { "ok" }))
        .layer(DefaultBodyLimit::max(options.max_upload_bytes))
        .with_state(state);
    let app = match options.ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    };
    app.layer(TraceLayer::new_for_http())
}

/// Serves until Ctrl-C.
pub async fn serve(addr: SocketAddr, options: ServiceOptions) -> anyhow::Result<()> {
    let _ = tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .try_init();
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(options))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

fn json_response(status: StatusCode, result: &SegmentationResult) -> Result<Response, ApiError> {
    let body = result
        .to_json()
        .map_err(|e| ApiError::Internal(e.to_string()))?;
    Ok((status, [(header::CONTENT_TYPE, "application/json")], body).into_response())
}

async fn persist(state: &AppState, id: &str, result: &SegmentationResult) -> Result<(), ApiError> {
    let Some(dir) = &state.results_dir else {
        return Ok(());
    };
    let body = result
        .to_json()
        .map_err(|e| ApiError::Internal(e.to_string()))?;
    tokio::fs::write(dir.join(format!("{id}.json")), body)
        .await
        .map_err(|e| ApiError::Internal(format!("cannot write result for {id}: {e}")))
}

fn session(state: &AppState, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
    state
        .store
        .get(id)
        .ok_or_else(|| ApiError::NotFound(id.to_string()))
}

async fn upload(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let config = state.config.clone();
    let raster = body.clone();
    let outcome = tokio::task::spawn_blocking(move || {
        let image = decode_scan(&raster, Path::new("upload"), None)?;
        segment(&image, &config)
    })
    .await
    .map_err(|e| ApiError::Internal(format!("segmentation task failed: {e}")))?;
    let result = outcome.map_err(|e| match e {
        CoreError::Decode { .. } | CoreError::Channel { .. } | CoreError::Dimension(_) => {
            ApiError::BadUpload(e.to_string())
        }
        other => ApiError::Unprocessable(other.to_string()),
    })?;
    let content_type = if body.starts_with(b"\x89PNG") {
        "image/png"
    } else {
        "image/x-portable-graymap"
    };
    let (rows, cols) = (result.rows, result.cols);
    let id = state.store.insert(Session {
        scan: body,
        content_type,
        result: result.clone(),
        history: Vec::new(),
    });
    persist(&state, &id, &result).await?;
    let location = HeaderValue::from_str(&format!("/api/scans/{id}"))
        .map_err(|e| ApiError::Internal(e.to_string()))?;
    Ok((
        StatusCode::CREATED,
        [(header::LOCATION, location)],
        Json(json!({ "session_id": id, "rows": rows, "cols": cols })),
    )
        .into_response())
}

async fn scan(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<Response, ApiError> {
    let session = session(&state, &id)?;
    let session = session.lock().await;
    Ok((
        [(header::CONTENT_TYPE, session.content_type)],
        session.scan.clone(),
    )
        .into_response())
}

async fn result(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<Response, ApiError> {
    let session = session(&state, &id)?;
    let session = session.lock().await;
    json_response(StatusCode::OK, &session.result)
}

async fn correct(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let session = session(&state, &id)?;
    let mut session = session.lock().await;
    let (layer, a, b) = parse_correction(&body, session.result.rows, session.result.cols)
        .map_err(ApiError::InvalidCorrection)?;
    let updated = session
        .result
        .apply_correction(layer, a, b)
        .map_err(|e| ApiError::Unprocessable(e.to_string()))?;
    let previous = std::mem::replace(&mut session.result, updated);
    session.history.push(previous);
    persist(&state, &id, &session.result).await?;
    json_response(StatusCode::OK, &session.result)
}

async fn undo(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<Response, ApiError> {
    let session = session(&state, &id)?;
    let mut session = session.lock().await;
    let previous = session
        .history
        .pop()
        .ok_or_else(|| ApiError::Conflict("nothing to undo".into()))?;
    session.result = previous;
    persist(&state, &id, &session.result).await?;
    json_response(StatusCode::OK, &session.result)
}

/// Validates a `{layer, a: {col, row}, b: {col, row}}` body against the scan
/// size, collecting every problem rather than stopping at the first.
pub fn parse_correction(
    body: &[u8],
    rows: usize,
    cols: usize,
) -> Result<(Layer, Point, Point), Vec<FieldProblem>> {
    let problem = |field: &str, problem: String| FieldProblem {
        field: field.into(),
        problem,
    };
    let value: Value = serde_json::from_slice(body)
        .map_err(|e| vec![problem("body", format!("invalid JSON: {e}"))])?;
    let Value::Object(fields) = value else {
        return Err(vec![problem("body", "expected a JSON object".into())]);
    };

    let mut problems = Vec::new();
    for key in fields.keys() {
        if !["layer", "a", "b"].contains(&key.as_str()) {
            problems.push(problem(key, "unknown field".into()));
        }
    }
    let layer = match fields.get("layer") {
        None => {
            problems.push(problem("layer", "missing".into()));
            None
        }
        Some(Value::String(s)) => match s.parse::<Layer>() {
            Ok(l) => Some(l),
            Err(_) => {
                problems.push(problem(
                    "layer",
                    format!("expected \"RPE\" or \"CHOROID\", got {s:?}"),
                ));
                None
            }
        },
        Some(other) => {
            problems.push(problem("layer", format!("expected a string, got {other}")));
            None
        }
    };

    let mut point = |name: &str| -> Option<Point> {
        let Some(value) = fields.get(name) else {
            problems.push(problem(name, "missing".into()));
            return None;
        };
        let Value::Object(p) = value else {
            problems.push(problem(name, "expected an object with col and row".into()));
            return None;
        };
        let mut coord = |key: &str, limit: usize| -> Option<usize> {
            let field = format!("{name}.{key}");
            match p.get(key).map(|v| (v, v.as_u64())) {
                None => problems.push(problem(&field, "missing".into())),
                Some((_, Some(n))) if (n as usize) < limit => return Some(n as usize),
                Some((_, Some(n))) => {
                    problems.push(problem(&field, format!("{n} is outside 0..{limit}")))
                }
                Some((v, None)) => problems.push(problem(
                    &field,
                    format!("expected a non-negative integer, got {v}"),
                )),
            }
            None
        };
        let col = coord("col", cols);
        let row = coord("row", rows);
        Some(Point::new(col?, row?))
    };
    let a = point("a");
    let b = point("b");

    if let (Some(a), Some(b)) = (a, b) {
        if a.col == b.col {
            problems.push(problem(
                "b.col",
                format!(
                    "both points lie in column {}; pick two different columns",
                    a.col
                ),
            ));
        }
    }
    match (layer, a, b) {
        (Some(layer), Some(a), Some(b)) if problems.is_empty() => Ok((layer, a, b)),
        _ => Err(problems),
    }
}
