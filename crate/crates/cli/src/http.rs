//! HTTP+JSON API over campaign engines.
//!
//! Each campaign owns one engine behind a mutex, which serializes its
//! commands. After every command the engine's state is published as an
//! immutable snapshot that reads use without touching the mutex.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use relcrowd_core::service::store::load_log;
use relcrowd_core::service::{
    aggregate, authenticate, CampaignEngine, EventSink, JsonlFileSink, QuizResponse, ServiceError, SystemClock,
};
use relcrowd_core::{CampaignState, Corpus, JobConfig, RelationType, SemanticQualifier, Unit};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

type Engine = CampaignEngine<JsonlFileSink, SystemClock>;

struct Campaign {
    engine: Mutex<Engine>,
    snapshot: RwLock<Arc<CampaignState>>,
}

impl Campaign {
    fn new(engine: Engine) -> Campaign {
        let snapshot = RwLock::new(Arc::new(engine.state().clone()));
        Campaign { engine: Mutex::new(engine), snapshot }
    }

    fn snapshot(&self) -> Arc<CampaignState> {
        self.snapshot.read().expect("snapshot lock").clone()
    }

    /// Runs one command under the campaign's lock and republishes the state.
    fn command<T>(&self, f: impl FnOnce(&mut Engine) -> Result<T, ServiceError>) -> Result<T, ApiError> {
        let mut engine = self.engine.lock().map_err(|_| ApiError::internal("campaign lock poisoned"))?;
        let before = engine.state().last_seq();
        let result = f(&mut engine);
        if engine.state().last_seq() != before {
            *self.snapshot.write().expect("snapshot lock") = Arc::new(engine.state().clone());
        }
        Ok(result?)
    }
}

pub struct AppState {
    corpora: HashMap<String, Arc<Corpus>>,
    campaigns: RwLock<HashMap<String, Arc<Campaign>>>,
    log_dir: PathBuf,
}

impl AppState {
    /// Prepares `data_dir`, checks it is writable, and resumes every campaign
    /// log found under `data_dir/campaigns`.
    pub fn open(data_dir: &Path, corpora: HashMap<String, Corpus>) -> Result<AppState, String> {
        let log_dir = data_dir.join("campaigns");
        fs::create_dir_all(&log_dir).map_err(|e| format!("{}: {e}", log_dir.display()))?;
        let probe = log_dir.join(".write-probe");
        fs::write(&probe, b"").map_err(|e| format!("{} is not writable: {e}", log_dir.display()))?;
        let _ = fs::remove_file(&probe);

        let mut campaigns = HashMap::new();
        let entries = fs::read_dir(&log_dir).map_err(|e| format!("{}: {e}", log_dir.display()))?;
        for entry in entries {
            let path = entry.map_err(|e| e.to_string())?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("jsonl") {
                continue;
            }
            let (state, _) = load_log(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            let sink = JsonlFileSink::open(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            let id = state.campaign_id().to_string();
            campaigns.insert(id, Arc::new(Campaign::new(CampaignEngine::resume(state, sink, SystemClock))));
        }
        Ok(AppState {
            corpora: corpora.into_iter().map(|(k, v)| (k, Arc::new(v))).collect(),
            campaigns: RwLock::new(campaigns),
            log_dir,
        })
    }

    fn campaign(&self, id: &str) -> Result<Arc<Campaign>, ApiError> {
        self.campaigns
            .read()
            .expect("campaign table lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::from(ServiceError::NotFound(format!("campaign {id}"))))
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
}

impl ApiError {
    fn internal(message: impl Into<String>) -> ApiError {
        ApiError { status: StatusCode::INTERNAL_SERVER_ERROR, kind: "internal", message: message.into() }
    }

    fn validation(message: impl Into<String>) -> ApiError {
        ApiError { status: StatusCode::UNPROCESSABLE_ENTITY, kind: "validation", message: message.into() }
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> ApiError {
        let (status, kind) = match &e {
            ServiceError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            ServiceError::Validation(_) => (StatusCode::UNPROCESSABLE_ENTITY, "validation"),
            ServiceError::Conflict(_) => (StatusCode::CONFLICT, "conflict"),
            ServiceError::Unauthorized => (StatusCode::UNAUTHORIZED, "unauthorized"),
            ServiceError::Forbidden(_) => (StatusCode::FORBIDDEN, "forbidden"),
            ServiceError::Replay { .. } | ServiceError::Internal(_) | ServiceError::Io(_) => {
                (StatusCode::INTERNAL_SERVER_ERROR, "internal")
            }
        };
        ApiError { status, kind, message: e.to_string() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.kind, "message": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Strict JSON body: malformed or unknown fields are a 422 with our error shape.
fn parse_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::validation(format!("invalid request body: {e}")))
}

fn bearer(headers: &HeaderMap) -> ApiResult<&str> {
    headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .ok_or_else(|| ServiceError::Unauthorized.into())
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateCampaign {
    corpus: String,
    #[serde(default)]
    config: JobConfig,
    campaign_id: Option<String>,
}

#[derive(Serialize)]
struct CampaignCreated {
    campaign_id: String,
    units: usize,
    quiz_size: usize,
    closed: bool,
}

async fn create_campaign(
    State(app): State<Arc<AppState>>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<CampaignCreated>)> {
    let req: CreateCampaign = parse_body(&body)?;
    let corpus = app
        .corpora
        .get(&req.corpus)
        .cloned()
        .ok_or_else(|| ServiceError::NotFound(format!("corpus {}", req.corpus)))?;
    let id = req.campaign_id.unwrap_or_else(|| format!("c-{}", uuid::Uuid::new_v4().simple()));
    if !valid_id(&id) {
        return Err(ApiError::validation("campaign_id must be 1-64 characters of [A-Za-z0-9_-]"));
    }
    let mut table = app.campaigns.write().expect("campaign table lock");
    let path = app.log_dir.join(format!("{id}.jsonl"));
    if table.contains_key(&id) || path.exists() {
        return Err(ServiceError::Conflict(format!("campaign {id} already exists")).into());
    }
    // Build against an in-memory log first so a rejected request leaves no file behind.
    let (state, records) = CampaignEngine::create(&id, &corpus, req.config, Vec::new(), SystemClock)?.into_parts();
    let mut sink = JsonlFileSink::open(&path).map_err(ServiceError::from)?;
    for record in &records {
        sink.append(record).map_err(ServiceError::from)?;
    }
    let engine = CampaignEngine::resume(state, sink, SystemClock);
    let state = engine.state();
    let created = CampaignCreated {
        campaign_id: id.clone(),
        units: state.units().count(),
        quiz_size: state.quiz().len(),
        closed: state.is_closed(),
    };
    table.insert(id, Arc::new(Campaign::new(engine)));
    Ok((StatusCode::CREATED, Json(created)))
}

async fn get_report(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<serde_json::Value>> {
    let snapshot = app.campaign(&id)?.snapshot();
    let report = snapshot.report().map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(Json(serde_json::to_value(report).expect("report serializes")))
}

#[derive(Serialize)]
struct Registered {
    worker_id: String,
    token: String,
}

async fn register_worker(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<(StatusCode, Json<Registered>)> {
    let campaign = app.campaign(&id)?;
    let token = uuid::Uuid::new_v4().simple().to_string();
    let worker_id = campaign.command(|e| {
        let worker_id = e.next_worker_id();
        e.register_worker(&worker_id, &token)?;
        Ok(worker_id)
    })?;
    Ok((StatusCode::CREATED, Json(Registered { worker_id, token })))
}

#[derive(Serialize)]
struct QuizItem<'a> {
    question_id: &'a str,
    unit: &'a Unit,
}

async fn get_quiz(
    State(app): State<Arc<AppState>>,
    UrlPath((id, wid)): UrlPath<(String, String)>,
    headers: HeaderMap,
) -> ApiResult<Json<serde_json::Value>> {
    let snapshot = app.campaign(&id)?.snapshot();
    authenticate(&snapshot, &wid, bearer(&headers)?)?;
    let items: Vec<QuizItem> =
        snapshot.quiz().iter().map(|q| QuizItem { question_id: &q.question_id, unit: &q.unit }).collect();
    Ok(Json(json!({ "questions": items })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QuizSubmission {
    responses: Vec<QuizResponse>,
}

async fn post_quiz(
    State(app): State<Arc<AppState>>,
    UrlPath((id, wid)): UrlPath<(String, String)>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Json<serde_json::Value>> {
    let campaign = app.campaign(&id)?;
    let token = bearer(&headers)?.to_string();
    let req: QuizSubmission = parse_body(&body)?;
    let result = campaign.command(|e| {
        e.authenticate(&wid, &token)?;
        e.submit_quiz(&wid, req.responses)
    })?;
    Ok(Json(json!({ "passed": result.passed, "accuracy": result.accuracy })))
}

async fn next_assignment(
    State(app): State<Arc<AppState>>,
    UrlPath((id, wid)): UrlPath<(String, String)>,
    headers: HeaderMap,
) -> ApiResult<Response> {
    let campaign = app.campaign(&id)?;
    let token = bearer(&headers)?.to_string();
    let next = campaign.command(|e| {
        e.authenticate(&wid, &token)?;
        e.next_assignment(&wid)
    })?;
    Ok(match next {
        Some(a) => Json(a).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JudgmentSubmission {
    assignment_id: String,
    relation: RelationType,
    #[serde(default)]
    qualifier: Option<SemanticQualifier>,
}

async fn post_judgment(
    State(app): State<Arc<AppState>>,
    UrlPath((id, wid)): UrlPath<(String, String)>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Json<serde_json::Value>> {
    let campaign = app.campaign(&id)?;
    let token = bearer(&headers)?.to_string();
    let req: JudgmentSubmission = parse_body(&body)?;
    let ack = campaign.command(|e| {
        e.authenticate(&wid, &token)?;
        e.submit_judgment(&wid, &req.assignment_id, req.relation, req.qualifier)
    })?;
    Ok(Json(serde_json::to_value(ack).expect("ack serializes")))
}

async fn get_aggregate(
    State(app): State<Arc<AppState>>,
    UrlPath((id, uid)): UrlPath<(String, String)>,
) -> ApiResult<Json<serde_json::Value>> {
    let snapshot = app.campaign(&id)?.snapshot();
    let answer = aggregate(&snapshot, &uid)?;
    Ok(Json(serde_json::to_value(answer).expect("aggregate serializes")))
}

pub fn router(app: Arc<AppState>) -> Router {
    Router::new()
        .route("/campaigns", post(create_campaign))
        .route("/campaigns/{id}/report", get(get_report))
        .route("/campaigns/{id}/workers", post(register_worker))
        .route("/campaigns/{id}/workers/{wid}/quiz", get(get_quiz).post(post_quiz))
        .route("/campaigns/{id}/workers/{wid}/next", get(next_assignment))
        .route("/campaigns/{id}/workers/{wid}/judgments", post(post_judgment))
        .route("/campaigns/{id}/units/{uid}/aggregate", get(get_aggregate))
        .with_state(app)
}
