//! HTTP service.
//!
//! | route | |
//! |---|---|
//! | `POST /api/analyze` | fixed effects: 200 with the result document; MCMC models: 202 with a job id |
//! | `GET /api/jobs/{id}` | job status, with the result or error once finished |
//! | `GET /api/jobs/{id}/result` | the result document exactly as the command line writes it |
//! | `GET /api/jobs/{id}/trace?model=` | trace CSV of a finished job |
//! | `GET /api/health` | liveness and version |
//! | `GET /api/schema` | JSON schema of the result document |
//! | `/` | the web UI bundle, when configured |
//!
//! Data errors answer 400, row-addressed invariant violations 422, unknown jobs
//! 404 and oversized bodies 413. Error bodies carry the same module-qualified
//! message the command line prints.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use tokio::sync::Semaphore;
use tower_http::services::ServeDir;
use uuid::Uuid;

use crate::analysis::{prepare, run_analysis, Analysis, AnalysisConfig, ModelChoice};
use crate::error::Error;
use crate::ingest::{parse_with, Delimiter};
use crate::mcmc::{write_trace_csv, ChainSet};
use crate::model::ModelKind;

pub const DEFAULT_MAX_BODY: usize = 8 * 1024 * 1024;

pub const RESULT_SCHEMA: &str = include_str!("../schema/result.schema.json");

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub workers: usize,
    pub persist_dir: Option<PathBuf>,
    pub ui_dir: Option<PathBuf>,
    pub data_dir: Option<PathBuf>,
    pub max_body_bytes: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            workers: default_workers(),
            persist_dir: None,
            ui_dir: None,
            data_dir: None,
            max_body_bytes: DEFAULT_MAX_BODY,
        }
    }
}

/// Body of `POST /api/analyze`. Exactly one of `data` (inline text) and
/// `data_ref` (a file name inside the server's data directory) is required.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeRequest {
    #[serde(default)]
    pub data: Option<String>,
    #[serde(default)]
    pub data_ref: Option<String>,
    /// Delimiter of inline data; `data_ref` files follow their extension.
    #[serde(default)]
    pub delimiter: Option<Delimiter>,
    pub config: AnalysisConfig,
    /// Accepted for compatibility; notifications are logged, never sent.
    #[serde(default)]
    pub notify_email: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorPayload {
    pub kind: String,
    pub module: String,
    pub message: String,
}

impl From<&Error> for ErrorPayload {
    fn from(e: &Error) -> Self {
        ErrorPayload {
            kind: e.kind().to_string(),
            module: e.module().to_string(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ErrorBody {
    error: ErrorPayload,
}

#[derive(Debug, Clone)]
struct Job {
    status: JobStatus,
    model: ModelChoice,
    /// Result document, as served by `/result`.
    result: Option<Arc<str>>,
    error: Option<ErrorPayload>,
    traces: Vec<(ModelKind, Arc<[ChainSet]>)>,
}

#[derive(Serialize)]
struct JobView<'a> {
    id: Uuid,
    status: JobStatus,
    model: ModelChoice,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a ErrorPayload>,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<&'a RawValue>,
}

/// Persisted form of a finished job.
#[derive(Serialize, Deserialize)]
struct StoredJob {
    status: JobStatus,
    model: ModelChoice,
    error: Option<ErrorPayload>,
    result: Option<String>,
}

pub struct AppState {
    jobs: Mutex<HashMap<Uuid, Job>>,
    slots: Arc<Semaphore>,
    config: ServiceConfig,
}

pub type SharedState = Arc<AppState>;

pub fn router(config: ServiceConfig) -> Router {
    let limit = config.max_body_bytes;
    let ui_dir = config.ui_dir.clone();
    let state = Arc::new(AppState {
        jobs: Mutex::new(HashMap::new()),
        slots: Arc::new(Semaphore::new(config.workers.max(1))),
        config,
    });
    let api = Router::new()
        .route("/api/analyze", post(analyze))
        .route("/api/jobs/{id}", get(job_status))
        .route("/api/jobs/{id}/result", get(job_result))
        .route("/api/jobs/{id}/trace", get(job_trace))
        .route("/api/health", get(health))
        .route("/api/schema", get(schema))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(placeholder)),
    }
}

pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> crate::error::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(config))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn error_response(status: StatusCode, e: &Error) -> Response {
    let body = serde_json::to_string(&ErrorBody { error: e.into() }).expect("error body serializes");
    json_response(status, body)
}

fn status_for(e: &Error) -> StatusCode {
    if e.is_invariant_violation() {
        StatusCode::UNPROCESSABLE_ENTITY
    } else {
        match e {
            Error::Numerical { .. } | Error::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::BAD_REQUEST,
        }
    }
}

fn not_found(what: String) -> Response {
    json_response(
        StatusCode::NOT_FOUND,
        serde_json::to_string(&ErrorBody {
            error: ErrorPayload { kind: "NotFound".into(), module: "service".into(), message: what },
        })
        .expect("error body serializes"),
    )
}

/// Resolves `name` inside `dir`, refusing anything but a plain relative path.
fn resolve_data_ref(dir: &Path, name: &str) -> Result<PathBuf, Error> {
    let rel = Path::new(name);
    if name.is_empty() || !rel.components().all(|c| matches!(c, Component::Normal(_))) {
        return Err(Error::Config(format!("data_ref `{name}` must be a relative path without `..`")));
    }
    Ok(dir.join(rel))
}

/// Loads the request's dataset as text with its delimiter.
fn load_data(state: &AppState, req: &AnalyzeRequest) -> Result<(String, Delimiter), Error> {
    match (&req.data, &req.data_ref) {
        (Some(text), None) => Ok((text.clone(), req.delimiter.unwrap_or_default())),
        (None, Some(name)) => {
            let dir = state
                .config
                .data_dir
                .as_deref()
                .ok_or_else(|| Error::Config("this server has no data directory; send `data` inline".into()))?;
            let path = resolve_data_ref(dir, name)?;
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Error::Config(format!("data_ref `{name}`: {e}")))?;
            Ok((text, req.delimiter.unwrap_or_else(|| Delimiter::for_path(&path))))
        }
        _ => Err(Error::Config("send exactly one of `data` and `data_ref`".into())),
    }
}

async fn analyze(State(state): State<SharedState>, body: Bytes) -> Response {
    let req: AnalyzeRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error_response(StatusCode::BAD_REQUEST, &Error::Config(e.to_string())),
    };
    let (text, delimiter) = match load_data(&state, &req) {
        Ok(d) => d,
        Err(e) => return error_response(status_for(&e), &e),
    };
    // Checks that need no sampling answer synchronously.
    let precheck = req.config.validate().and_then(|_| {
        let table = parse_with(&text, delimiter)?;
        prepare(&table, &req.config).map(|_| ())
    });
    if let Err(e) = precheck {
        return error_response(status_for(&e), &e);
    }
    let config = req.config;
    if config.model == ModelChoice::Fixed {
        let outcome = tokio::task::spawn_blocking(move || run_analysis(&text, delimiter, &config)).await;
        return match outcome {
            Ok(Ok(analysis)) => json_response(StatusCode::OK, analysis.document.to_json()),
            Ok(Err(e)) => error_response(status_for(&e), &e),
            Err(join) => error_response(
                StatusCode::INTERNAL_SERVER_ERROR,
                &Error::Numerical { module: "service", message: join.to_string() },
            ),
        };
    }

    let id = Uuid::new_v4();
    let model = config.model;
    if let Some(email) = &req.notify_email {
        log::info!("job {id}: email notification to {email} requested; notifications are not sent");
    }
    state.jobs.lock().expect("job table").insert(
        id,
        Job { status: JobStatus::Queued, model, result: None, error: None, traces: Vec::new() },
    );
    let worker = state.clone();
    tokio::spawn(async move {
        let _permit = worker.slots.clone().acquire_owned().await.expect("semaphore open");
        set_status(&worker, id, JobStatus::Running);
        let outcome = tokio::task::spawn_blocking(move || run_analysis(&text, delimiter, &config))
            .await
            .unwrap_or_else(|join| Err(Error::Numerical { module: "service", message: join.to_string() }));
        finish(&worker, id, outcome);
    });
    json_response(
        StatusCode::ACCEPTED,
        serde_json::json!({ "id": id, "status": JobStatus::Queued, "model": model }).to_string(),
    )
}

fn set_status(state: &AppState, id: Uuid, status: JobStatus) {
    if let Some(job) = state.jobs.lock().expect("job table").get_mut(&id) {
        job.status = status;
    }
}

fn finish(state: &AppState, id: Uuid, outcome: crate::error::Result<Analysis>) {
    let snapshot = {
        let mut jobs = state.jobs.lock().expect("job table");
        let Some(job) = jobs.get_mut(&id) else { return };
        match outcome {
            Ok(analysis) => {
                job.status = JobStatus::Done;
                job.result = Some(Arc::from(analysis.document.to_json()));
                job.traces = analysis
                    .fits
                    .into_iter()
                    .filter(|f| !f.chains.is_empty())
                    .map(|f| (f.kind, Arc::from(f.chains)))
                    .collect();
            }
            Err(e) => {
                log::warn!("job {id} failed: {e}");
                job.status = JobStatus::Failed;
                job.error = Some((&e).into());
            }
        }
        job.clone()
    };
    if let Some(dir) = &state.config.persist_dir {
        if let Err(e) = persist(dir, id, &snapshot) {
            log::error!("job {id}: could not persist: {e}");
        }
    }
}

fn persist(dir: &Path, id: Uuid, job: &Job) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let stored = StoredJob {
        status: job.status,
        model: job.model,
        error: job.error.clone(),
        result: job.result.as_deref().map(str::to_string),
    };
    std::fs::write(dir.join(format!("{id}.json")), serde_json::to_vec(&stored)?)?;
    for (kind, sets) in &job.traces {
        let file = std::fs::File::create(dir.join(format!("{id}.{kind}.trace.csv")))?;
        write_trace_csv(sets, std::io::BufWriter::new(file)).map_err(|e| std::io::Error::other(e.to_string()))?;
    }
    Ok(())
}

/// In-memory job, or one restored from the persistence directory.
fn lookup(state: &AppState, id: Uuid) -> Option<Job> {
    if let Some(job) = state.jobs.lock().expect("job table").get(&id) {
        return Some(job.clone());
    }
    let dir = state.config.persist_dir.as_ref()?;
    let bytes = std::fs::read(dir.join(format!("{id}.json"))).ok()?;
    let stored: StoredJob = serde_json::from_slice(&bytes).ok()?;
    Some(Job {
        status: stored.status,
        model: stored.model,
        result: stored.result.map(Arc::from),
        error: stored.error,
        traces: Vec::new(),
    })
}

fn parse_id(raw: &str) -> Result<Uuid, Box<Response>> {
    Uuid::parse_str(raw).map_err(|_| Box::new(not_found(format!("unknown job `{raw}`"))))
}

async fn job_status(State(state): State<SharedState>, UrlPath(raw): UrlPath<String>) -> Response {
    let id = match parse_id(&raw) {
        Ok(id) => id,
        Err(r) => return *r,
    };
    let Some(job) = lookup(&state, id) else {
        return not_found(format!("unknown job `{id}`"));
    };
    let raw_result = job
        .result
        .as_deref()
        .map(|s| RawValue::from_string(s.trim_end().to_string()).expect("stored result is JSON"));
    let view = JobView {
        id,
        status: job.status,
        model: job.model,
        error: job.error.as_ref(),
        result: raw_result.as_deref(),
    };
    json_response(StatusCode::OK, serde_json::to_string(&view).expect("job view serializes"))
}

async fn job_result(State(state): State<SharedState>, UrlPath(raw): UrlPath<String>) -> Response {
    let id = match parse_id(&raw) {
        Ok(id) => id,
        Err(r) => return *r,
    };
    match lookup(&state, id) {
        None => not_found(format!("unknown job `{id}`")),
        Some(Job { result: Some(doc), .. }) => json_response(StatusCode::OK, doc.to_string()),
        Some(Job { error: Some(err), .. }) => json_response(
            StatusCode::OK,
            serde_json::to_string(&ErrorBody { error: err }).expect("error body serializes"),
        ),
        Some(job) => json_response(
            StatusCode::CONFLICT,
            serde_json::json!({ "id": id, "status": job.status }).to_string(),
        ),
    }
}

#[derive(Deserialize)]
struct TraceQuery {
    model: Option<ModelKind>,
}

async fn job_trace(
    State(state): State<SharedState>,
    UrlPath(raw): UrlPath<String>,
    Query(q): Query<TraceQuery>,
) -> Response {
    let id = match parse_id(&raw) {
        Ok(id) => id,
        Err(r) => return *r,
    };
    let Some(job) = lookup(&state, id) else {
        return not_found(format!("unknown job `{id}`"));
    };
    if job.status != JobStatus::Done {
        return json_response(
            StatusCode::CONFLICT,
            serde_json::json!({ "id": id, "status": job.status }).to_string(),
        );
    }
    let csv_response = |body: Vec<u8>| {
        (StatusCode::OK, [(header::CONTENT_TYPE, "text/csv")], body).into_response()
    };
    let chosen = job.traces.iter().find(|(k, _)| q.model.is_none_or(|m| m == *k));
    if let Some((_, sets)) = chosen {
        let mut body = Vec::new();
        return match write_trace_csv(sets, &mut body) {
            Ok(()) => csv_response(body),
            Err(e) => error_response(StatusCode::INTERNAL_SERVER_ERROR, &e),
        };
    }
    // Restored jobs keep their traces on disk.
    if let (Some(dir), Some(kind)) = (&state.config.persist_dir, q.model.or(match job.model {
        ModelChoice::Random => Some(ModelKind::Random),
        ModelChoice::Regression => Some(ModelKind::Regression),
        _ => None,
    })) {
        if let Ok(body) = std::fs::read(dir.join(format!("{id}.{kind}.trace.csv"))) {
            return csv_response(body);
        }
    }
    not_found(format!("job `{id}` has no trace for the requested model"))
}

async fn health() -> Response {
    json_response(
        StatusCode::OK,
        serde_json::json!({ "status": "ok", "version": crate::analysis::VERSION }).to_string(),
    )
}

async fn schema() -> Response {
    json_response(StatusCode::OK, RESULT_SCHEMA.to_string())
}

async fn placeholder() -> Html<&'static str> {
    Html(
        "<!doctype html><title>metaprior</title><h1>metaprior</h1>\
         <p>The web UI is not installed. Start the server with <code>--ui-dir</code> \
         pointing at the built bundle, or use the JSON API under <code>/api</code>.</p>",
    )
}
