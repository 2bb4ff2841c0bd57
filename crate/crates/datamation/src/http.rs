//! The HTTP service. Every error body has the shape
//! `{"error": {"code", "message", "steps"}}`.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use datamation_core::decompose::decompose_explained;
use datamation_core::qdmr::Provenance;
use datamation_core::{
    compile_datamation, linearize_query, parse_pipeline, CompileError, CompileOptions, DecomposeError, Pipeline,
    Table,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::Mutex;

use crate::csv_io::{read_table, LoadError};
use crate::session::{Edit, EditError, Session};
use crate::store::{now_ms, DataDir, SessionRecord, SharedLedger, StoreError};

pub const VERSION_HEADER: &str = "x-session-version";
pub const DOC_ID_HEADER: &str = "x-datamation-id";

/// An error response.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
    pub steps: Vec<usize>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            code: code.to_string(),
            message: message.into(),
            steps: Vec::new(),
        }
    }

    fn with_steps(mut self, steps: Vec<usize>) -> ApiError {
        self.steps = steps;
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": {"code": self.code, "message": self.message, "steps": self.steps}});
        (self.status, Json(body)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> ApiError {
        let status = match &e {
            StoreError::NotFound { .. } => StatusCode::NOT_FOUND,
            StoreError::Load(_) => StatusCode::BAD_REQUEST,
            StoreError::Feedback(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let steps = match &e {
            StoreError::Feedback(DecomposeError::InvalidCorrection(errors)) => errors.iter().map(|e| e.step).collect(),
            _ => Vec::new(),
        };
        ApiError::new(status, e.code(), e.to_string()).with_steps(steps)
    }
}

impl From<LoadError> for ApiError {
    fn from(e: LoadError) -> ApiError {
        ApiError::new(StatusCode::BAD_REQUEST, e.code(), e.to_string())
    }
}

impl From<EditError> for ApiError {
    fn from(e: EditError) -> ApiError {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.code(), e.to_string()).with_steps(e.steps())
    }
}

impl From<CompileError> for ApiError {
    fn from(e: CompileError) -> ApiError {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.code(), e.to_string()).with_steps(e.steps())
    }
}

impl From<DecomposeError> for ApiError {
    fn from(e: DecomposeError) -> ApiError {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.code(), e.to_string())
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn body_json<T: for<'de> Deserialize<'de>>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "BadRequest", e.to_string()))
}

struct LiveSession {
    session: Session,
    table: Arc<Table>,
}

/// Shared service state.
pub struct AppState {
    dir: DataDir,
    ledger: SharedLedger,
    compile: CompileOptions,
    tables: RwLock<HashMap<String, Arc<Table>>>,
    sessions: RwLock<HashMap<String, Arc<Mutex<LiveSession>>>>,
}

impl AppState {
    /// State over a data directory, loading its ledger.
    pub fn open(dir: DataDir) -> Result<AppState, StoreError> {
        let ledger = SharedLedger::open(&dir.ledger_path())?;
        Ok(AppState {
            dir,
            ledger,
            compile: CompileOptions::default(),
            tables: RwLock::new(HashMap::new()),
            sessions: RwLock::new(HashMap::new()),
        })
    }

    pub fn ledger(&self) -> &SharedLedger {
        &self.ledger
    }

    fn table(&self, id: &str) -> ApiResult<Arc<Table>> {
        if let Some(t) = self.tables.read().expect("table cache").get(id) {
            return Ok(t.clone());
        }
        let t = Arc::new(self.dir.load_dataset(id)?);
        self.tables.write().expect("table cache").insert(id.to_string(), t.clone());
        Ok(t)
    }

    fn session(&self, id: &str) -> ApiResult<Arc<Mutex<LiveSession>>> {
        if let Some(s) = self.sessions.read().expect("session map").get(id) {
            return Ok(s.clone());
        }
        let record = self.dir.load_session(id)?;
        let table = self.table(&record.dataset_id)?;
        let session = Session::replay(&record.id, &record.dataset_id, &record.history, &table).map_err(|e| {
            ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "CorruptSession", e.to_string())
        })?;
        let live = Arc::new(Mutex::new(LiveSession { session, table }));
        let mut map = self.sessions.write().expect("session map");
        Ok(map.entry(id.to_string()).or_insert(live).clone())
    }

    fn persist(&self, s: &Session) -> ApiResult<()> {
        Ok(self.dir.put_session(&SessionRecord {
            id: s.id.clone(),
            dataset_id: s.dataset_id.clone(),
            history: s.history().to_vec(),
        })?)
    }

    fn compile(&self, s: &Session, table: &Table, pipeline: &Pipeline) -> ApiResult<Response> {
        let opts = CompileOptions {
            query: s.query().map(str::to_string),
            ..self.compile.clone()
        };
        let doc = compile_datamation(pipeline, table, &opts)?;
        let (id, text) = self.dir.put_doc(&doc)?;
        Ok(doc_response(text, &id, s.version()))
    }
}

fn doc_response(text: String, id: &str, version: usize) -> Response {
    let mut headers = HeaderMap::new();
    headers.insert(header::CONTENT_TYPE, HeaderValue::from_static("application/json"));
    headers.insert(DOC_ID_HEADER, HeaderValue::from_str(id).expect("hex id"));
    headers.insert(VERSION_HEADER, HeaderValue::from(version as u64));
    (StatusCode::OK, headers, text).into_response()
}

/// The service routes over shared state.
pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/datasets", post(post_dataset))
        .route("/datasets/{id}", get(get_dataset))
        .route("/sessions", post(post_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/decompose", post(post_decompose))
        .route("/sessions/{id}/compile", post(post_compile))
        .route("/sessions/{id}/pipeline", patch(patch_pipeline))
        .route("/sessions/{id}/feedback", post(post_feedback))
        .route("/datamations/{id}", get(get_datamation))
        .with_state(state)
}

/// Serves until the process is stopped.
pub async fn serve(state: Arc<AppState>, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    axum::serve(listener, router(state)).await
}

#[derive(Debug, Deserialize)]
struct DatasetQuery {
    name: Option<String>,
}

#[derive(Debug, Serialize)]
struct DatasetInfo {
    id: String,
    name: String,
    columns: Vec<datamation_core::Column>,
    row_count: usize,
}

fn dataset_info(id: &str, t: &Table) -> DatasetInfo {
    DatasetInfo {
        id: id.to_string(),
        name: t.name().to_string(),
        columns: t.columns().to_vec(),
        row_count: t.row_count(),
    }
}

async fn post_dataset(
    State(state): State<Arc<AppState>>,
    Query(q): Query<DatasetQuery>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<DatasetInfo>)> {
    let name = q.name.unwrap_or_else(|| "data".to_string());
    let table = read_table(body.as_ref(), &name, &Default::default())?;
    let id = state.dir.put_dataset(&table)?;
    let info = dataset_info(&id, &table);
    state.tables.write().expect("table cache").insert(id, Arc::new(table));
    Ok((StatusCode::CREATED, Json(info)))
}

async fn get_dataset(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<DatasetInfo>> {
    let t = state.table(&id)?;
    Ok(Json(dataset_info(&id, &t)))
}

#[derive(Debug, Deserialize)]
struct NewSession {
    dataset_id: String,
}

async fn post_session(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<(StatusCode, Json<Value>)> {
    let req: NewSession = body_json(&body)?;
    let table = state.table(&req.dataset_id)?;
    let id = uuid::Uuid::new_v4().simple().to_string();
    let session = Session::new(&id, &req.dataset_id);
    state.persist(&session)?;
    let live = Arc::new(Mutex::new(LiveSession { session, table }));
    state.sessions.write().expect("session map").insert(id.clone(), live);
    Ok((StatusCode::CREATED, Json(json!({"session_id": id, "version": 0}))))
}

fn session_view(s: &Session) -> Value {
    json!({
        "id": s.id,
        "dataset_id": s.dataset_id,
        "version": s.version(),
        "script": s.pipeline().map(Pipeline::to_script),
        "query": s.query(),
        "history": s.history(),
    })
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let live = state.session(&id)?;
    let live = live.lock().await;
    Ok(Json(session_view(&live.session)))
}

#[derive(Debug, Deserialize)]
struct DecomposeRequest {
    query: String,
}

async fn post_decompose(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let req: DecomposeRequest = body_json(&body)?;
    let live = state.session(&id)?;
    let mut live = live.lock().await;
    let table = live.table.clone();
    let ledger = state.ledger.snapshot();
    let d = decompose_explained(&linearize_query(&req.query, &table), &table, &ledger)?;
    let script = d.pipeline.to_script();
    let edit = Edit::Set {
        script: script.clone(),
        query: Some(req.query.clone()),
        provenance: d.pipeline.provenance(),
    };
    let pipeline = live.session.preview(&edit, &table)?;
    live.session.commit(edit, pipeline);
    state.persist(&live.session)?;
    Ok(Json(json!({
        "script": script,
        "origin": d.origin,
        "provenance": d.pipeline.provenance(),
        "version": live.session.version(),
    })))
}

#[derive(Debug, Default, Deserialize)]
struct CompileRequest {
    script: Option<String>,
}

async fn post_compile(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let req: CompileRequest = if body.is_empty() {
        CompileRequest::default()
    } else {
        body_json(&body)?
    };
    let live = state.session(&id)?;
    let mut live = live.lock().await;
    let table = live.table.clone();
    let pipeline = match req.script {
        Some(script) => {
            let parsed = parse_pipeline(&script).map_err(EditError::from)?;
            let unchanged = live.session.pipeline().is_some_and(|p| p.steps() == parsed.steps());
            if unchanged {
                live.session.pipeline().cloned().expect("checked above")
            } else {
                let edit = Edit::Set {
                    script: parsed.to_script(),
                    query: None,
                    provenance: Provenance::UserEdited,
                };
                let pipeline = live.session.preview(&edit, &table)?;
                let mut next = live.session.clone();
                next.commit(edit, pipeline.clone());
                let response = state.compile(&next, &table, &pipeline)?;
                state.persist(&next)?;
                live.session = next;
                return Ok(response);
            }
        }
        None => live.session.pipeline().cloned().ok_or(EditError::NoPipeline)?,
    };
    state.compile(&live.session, &table, &pipeline)
}

#[derive(Debug, Deserialize)]
struct PatchRequest {
    version: usize,
    #[serde(flatten)]
    edit: Edit,
}

async fn patch_pipeline(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let req: PatchRequest = body_json(&body)?;
    let live = state.session(&id)?;
    let mut live = live.lock().await;
    let current = live.session.version();
    if req.version != current {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "VersionConflict",
            format!("the edit was made against version {} but the session is at {current}", req.version),
        ));
    }
    let table = live.table.clone();
    let pipeline = live.session.preview(&req.edit, &table)?;
    let mut next = live.session.clone();
    next.commit(req.edit, pipeline.clone());
    let response = state.compile(&next, &table, &pipeline)?;
    state.persist(&next)?;
    live.session = next;
    Ok(response)
}

#[derive(Debug, Deserialize)]
struct FeedbackRequest {
    original: String,
    corrected: String,
    query: Option<String>,
}

async fn post_feedback(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult<StatusCode> {
    let req: FeedbackRequest = body_json(&body)?;
    let live = state.session(&id)?;
    let live = live.lock().await;
    let query = req
        .query
        .or_else(|| live.session.query().map(str::to_string))
        .ok_or_else(|| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "MissingQuery", "no query to attach the correction to"))?;
    let original = parse_pipeline(&req.original).map_err(EditError::from)?;
    let corrected = parse_pipeline(&req.corrected).map_err(EditError::from)?;
    state
        .ledger
        .record(&query, &live.table, &original, &corrected, now_ms())?;
    Ok(StatusCode::NO_CONTENT)
}

async fn get_datamation(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let text = state.dir.doc_text(&id)?;
    Ok(([(header::CONTENT_TYPE, "application/json")], text).into_response())
}
