//! HTTP API over deck sessions.
//!
//! Every deck lives in its own session guarded by its own mutex, so edits to
//! one deck never wait on another. Mutations carry the revision the client
//! last saw and are rejected with 409 when it is stale.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use nbdeck_core::deck::{Provenance, SlidePatch};
use nbdeck_core::embedding::EmbedderHandle;
use nbdeck_core::export::{canonical_json, export_deck, import_deck, to_canonical_json};
use nbdeck_core::notebook::{ArtifactKind, CellKind};
use nbdeck_core::summarizer::SummarizerHandle;
use nbdeck_core::tree::NotebookTree;
use nbdeck_core::{
    generate_deck, parse_notebook, Audience, DeckConfig, DeckError, DeckFormat, DetailLevel,
    NotebookDocument, NotebookError, SlideDeck,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::{Mutex, RwLock};

pub const EMBEDDER_ENV: &str = "NBDECK_EMBEDDER_URL";
pub const SUMMARIZER_ENV: &str = "NBDECK_SUMMARIZER_URL";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Backends {
    pub embedder: EmbedderHandle,
    pub summarizer: SummarizerHandle,
}

impl Backends {
    pub fn builtin() -> Self {
        Backends {
            embedder: EmbedderHandle::builtin(),
            summarizer: SummarizerHandle::builtin(),
        }
    }

    /// Builtin backends unless the endpoint environment variables are set.
    pub fn from_env() -> Self {
        let mut b = Self::builtin();
        if let Some(url) = env_url(EMBEDDER_ENV) {
            b.embedder = EmbedderHandle::remote(url);
        }
        if let Some(url) = env_url(SUMMARIZER_ENV) {
            b.summarizer = SummarizerHandle::remote(url);
        }
        b
    }
}

fn env_url(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.trim().is_empty())
}

#[derive(Debug, Clone)]
pub struct DeckSession {
    pub deck: SlideDeck,
    pub notebook: NotebookDocument,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    sessions: RwLock<HashMap<String, Arc<Mutex<DeckSession>>>>,
    store: Option<PathBuf>,
    backends: Backends,
}

impl AppState {
    pub fn new(backends: Backends) -> Self {
        AppState {
            inner: Arc::new(Inner {
                sessions: RwLock::new(HashMap::new()),
                store: None,
                backends,
            }),
        }
    }

    /// Sessions are written to `dir` after every change and reloaded from it.
    pub fn with_store(backends: Backends, dir: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(dir)?;
        let mut sessions = HashMap::new();
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            let Some(id) = path
                .file_name()
                .and_then(|n| n.to_str())
                .and_then(|n| n.strip_suffix(".deck.json"))
            else {
                continue;
            };
            match load_session(dir, id) {
                Ok(session) => {
                    sessions.insert(id.to_string(), Arc::new(Mutex::new(session)));
                }
                Err(e) => log::warn!("ignoring stored session {id}: {e}"),
            }
        }
        log::info!(
            "loaded {} session(s) from {}",
            sessions.len(),
            dir.display()
        );
        Ok(AppState {
            inner: Arc::new(Inner {
                sessions: RwLock::new(sessions),
                store: Some(dir.to_path_buf()),
                backends,
            }),
        })
    }

    pub fn backends(&self) -> &Backends {
        &self.inner.backends
    }

    pub async fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.inner.sessions.read().await.keys().cloned().collect();
        ids.sort();
        ids
    }

    async fn session(&self, id: &str) -> Result<Arc<Mutex<DeckSession>>, ApiError> {
        self.inner
            .sessions
            .read()
            .await
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::UnknownDeck(id.to_string()))
    }

    async fn snapshot(&self, id: &str) -> Result<DeckSession, ApiError> {
        let session = self.session(id).await?;
        let guard = session.lock().await;
        Ok(guard.clone())
    }

    fn persist(
        &self,
        id: &str,
        session: &DeckSession,
        raw_notebook: Option<&str>,
    ) -> Result<(), ApiError> {
        let Some(dir) = &self.inner.store else {
            return Ok(());
        };
        let io = |e: std::io::Error| ApiError::Internal(format!("persisting session {id}: {e}"));
        if let Some(raw) = raw_notebook {
            fs::write(dir.join(format!("{id}.ipynb")), raw).map_err(io)?;
        }
        let tmp = dir.join(format!("{id}.deck.json.tmp"));
        fs::write(&tmp, to_canonical_json(&session.deck)).map_err(io)?;
        fs::rename(&tmp, dir.join(format!("{id}.deck.json"))).map_err(io)
    }

    /// Apply `op` to a copy of the deck if `expected` is the current revision;
    /// the session is only replaced when the operation succeeds.
    async fn mutate<T>(
        &self,
        id: &str,
        expected: u64,
        op: impl FnOnce(&mut SlideDeck) -> Result<T, DeckError>,
    ) -> Result<(SlideDeck, T), ApiError> {
        let session = self.session(id).await?;
        let mut guard = session.lock().await;
        if guard.deck.revision != expected {
            return Err(ApiError::RevisionConflict {
                expected,
                current: guard.deck.revision,
            });
        }
        let mut next = guard.clone();
        let out = op(&mut next.deck)?;
        self.persist(id, &next, None)?;
        *guard = next;
        Ok((guard.deck.clone(), out))
    }
}

fn load_session(dir: &Path, id: &str) -> anyhow::Result<DeckSession> {
    let deck_path = dir.join(format!("{id}.deck.json"));
    let deck = import_deck(&fs::read(&deck_path)?)?;
    let nb_path = dir.join(format!("{id}.ipynb"));
    let notebook = parse_notebook(&fs::read_to_string(&nb_path)?, &nb_path.to_string_lossy())?;
    let created_at = fs::metadata(&deck_path)?
        .modified()?
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Ok(DeckSession {
        deck,
        notebook,
        created_at,
    })
}

#[derive(Debug)]
pub enum ApiError {
    UnknownDeck(String),
    UnknownSlide(String),
    RevisionConflict { expected: u64, current: u64 },
    MalformedNotebook(String),
    RemoteUnavailable(String),
    BadRequest(String),
    Internal(String),
}

impl ApiError {
    fn parts(&self) -> (StatusCode, &'static str, String) {
        match self {
            ApiError::UnknownDeck(id) => (
                StatusCode::NOT_FOUND,
                "unknown_deck",
                format!("no deck {id:?}"),
            ),
            ApiError::UnknownSlide(id) => (
                StatusCode::NOT_FOUND,
                "unknown_slide",
                format!("no slide {id:?}"),
            ),
            ApiError::RevisionConflict { expected, current } => (
                StatusCode::CONFLICT,
                "revision_conflict",
                format!("expected revision {expected} but the deck is at {current}"),
            ),
            ApiError::MalformedNotebook(m) => (
                StatusCode::UNPROCESSABLE_ENTITY,
                "malformed_notebook",
                m.clone(),
            ),
            ApiError::RemoteUnavailable(m) => {
                (StatusCode::BAD_GATEWAY, "remote_unavailable", m.clone())
            }
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, "bad_request", m.clone()),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, "internal", m.clone()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, kind, message) = self.parts();
        let mut body = json!({ "error": kind, "message": message });
        if let ApiError::RevisionConflict { current, .. } = self {
            body["current_revision"] = json!(current);
        }
        (status, Json(body)).into_response()
    }
}

impl From<DeckError> for ApiError {
    fn from(e: DeckError) -> Self {
        match e {
            DeckError::UnknownSlide(id) => ApiError::UnknownSlide(id),
            DeckError::RemoteUnavailable(m) => ApiError::RemoteUnavailable(m),
            other @ (DeckError::CannotDeleteTitle
            | DeckError::InvalidEdit(_)
            | DeckError::InvalidParams(_)
            | DeckError::Template(_)) => ApiError::BadRequest(other.to_string()),
            other @ DeckError::Summarize(_) => ApiError::Internal(other.to_string()),
        }
    }
}

impl From<NotebookError> for ApiError {
    fn from(e: NotebookError) -> Self {
        ApiError::MalformedNotebook(e.to_string())
    }
}

/// Canonical JSON response.
fn canonical<T: Serialize>(status: StatusCode, body: &T) -> Response {
    let value = serde_json::to_value(body).expect("responses serialize");
    let mut resp = (status, canonical_json(&value)).into_response();
    resp.headers_mut().insert(
        header::CONTENT_TYPE,
        HeaderValue::from_static("application/json"),
    );
    resp
}

#[derive(Debug, Clone, Deserialize)]
pub struct CreateDeckRequest {
    /// The notebook file, either as its JSON object or as the raw file text.
    pub notebook: Value,
    #[serde(default)]
    pub config: CreateConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct CreateConfig {
    pub title: String,
    pub presenter: String,
    pub audience: Audience,
    pub detail: DetailLevel,
    /// Vector dimension of the builtin embedder; ignored for a remote one.
    pub dimension: Option<usize>,
}

impl Default for CreateConfig {
    fn default() -> Self {
        CreateConfig {
            title: "Untitled".into(),
            presenter: String::new(),
            audience: Audience::Technical,
            detail: DetailLevel::Standard,
            dimension: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct EditRequest {
    pub expected_revision: u64,
    #[serde(flatten)]
    pub patch: SlidePatch,
}

#[derive(Debug, Clone, Deserialize)]
pub struct AddRequest {
    pub expected_revision: u64,
    pub after: String,
    #[serde(default)]
    pub title: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct RevisionQuery {
    pub expected_revision: u64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct LinksQuery {
    pub slide: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ExportQuery {
    #[serde(default = "default_format")]
    pub format: String,
}

fn default_format() -> String {
    "json".into()
}

#[derive(Debug, Clone, Serialize)]
pub struct LinksResponse {
    pub slide: String,
    pub links: Vec<Provenance>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellOverview {
    pub index: usize,
    pub kind: CellKind,
    pub source: String,
    pub outputs: Vec<ArtifactKind>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NotebookOverview {
    pub cell_count: usize,
    pub cells: Vec<CellOverview>,
    pub tree: NotebookTree,
}

pub fn notebook_overview(session: &DeckSession) -> NotebookOverview {
    NotebookOverview {
        cell_count: session.notebook.cells.len(),
        cells: session
            .notebook
            .cells
            .iter()
            .map(|c| CellOverview {
                index: c.index,
                kind: c.kind,
                source: c.source.clone(),
                outputs: c.outputs.iter().map(|o| o.kind).collect(),
            })
            .collect(),
        tree: session.deck.tree.clone(),
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/decks", post(create_deck))
        .route("/api/decks/{id}", get(get_deck))
        .route("/api/decks/{id}/slides", post(add_slide))
        .route(
            "/api/decks/{id}/slides/{slide_id}",
            patch(edit_slide).delete(delete_slide),
        )
        .route("/api/decks/{id}/links", get(links))
        .route("/api/decks/{id}/notebook", get(notebook))
        .route("/api/decks/{id}/export", get(export))
        .with_state(state)
}

/// The API plus static files from `static_dir` on every other path.
pub fn router_with_static(state: AppState, static_dir: &Path) -> Router {
    router(state).fallback_service(tower_http::services::ServeDir::new(static_dir))
}

async fn create_deck(
    State(state): State<AppState>,
    body: Result<Json<CreateDeckRequest>, axum::extract::rejection::JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(req) = body.map_err(|e| ApiError::BadRequest(e.body_text()))?;
    let raw = match req.notebook {
        Value::String(s) => s,
        other => other.to_string(),
    };
    let notebook = parse_notebook(&raw, "upload.ipynb")?;
    let mut backends = state.backends().clone();
    let cfg = req.config;
    if let Some(d) = cfg.dimension {
        if d == 0 {
            return Err(ApiError::BadRequest("dimension must be positive".into()));
        }
        backends.embedder.set_builtin_dimension(d);
    }
    let config = DeckConfig {
        embedder: backends.embedder,
        summarizer: backends.summarizer,
        ..DeckConfig::new(cfg.title, cfg.presenter, cfg.audience, cfg.detail)
    };
    let nb = notebook.clone();
    let mut deck = tokio::task::spawn_blocking(move || generate_deck(&nb, &config))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))??;

    let created_at = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut sessions = state.inner.sessions.write().await;
    // same content gives the same deck id, so number the sessions
    let id = (1..)
        .map(|n| format!("{}-{n}", deck.deck_id))
        .find(|id| !sessions.contains_key(id))
        .expect("unbounded range");
    deck.deck_id = id.clone();
    let session = DeckSession {
        deck,
        notebook,
        created_at,
    };
    state.persist(&id, &session, Some(&raw))?;
    let resp = canonical(StatusCode::CREATED, &session.deck);
    sessions.insert(id.clone(), Arc::new(Mutex::new(session)));
    log::info!("created deck {id}");
    Ok(with_location(resp, &format!("/api/decks/{id}")))
}

fn with_location(mut resp: Response, location: &str) -> Response {
    if let Ok(v) = HeaderValue::from_str(location) {
        resp.headers_mut().insert(header::LOCATION, v);
    }
    resp
}

async fn get_deck(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<Response, ApiError> {
    let s = state.snapshot(&id).await?;
    Ok(canonical(StatusCode::OK, &s.deck))
}

async fn edit_slide(
    State(state): State<AppState>,
    UrlPath((id, slide_id)): UrlPath<(String, String)>,
    body: Result<Json<EditRequest>, axum::extract::rejection::JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(req) = body.map_err(|e| ApiError::BadRequest(e.body_text()))?;
    let (deck, ()) = state
        .mutate(&id, req.expected_revision, |d| {
            d.edit_slide(&slide_id, &req.patch)
        })
        .await?;
    Ok(canonical(StatusCode::OK, &deck))
}

async fn add_slide(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<AddRequest>, axum::extract::rejection::JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(req) = body.map_err(|e| ApiError::BadRequest(e.body_text()))?;
    let (deck, slide_id) = state
        .mutate(&id, req.expected_revision, |d| {
            d.add_slide(&req.after, &req.title)
        })
        .await?;
    Ok(with_location(
        canonical(StatusCode::CREATED, &deck),
        &format!("/api/decks/{id}/slides/{slide_id}"),
    ))
}

async fn delete_slide(
    State(state): State<AppState>,
    UrlPath((id, slide_id)): UrlPath<(String, String)>,
    query: Result<Query<RevisionQuery>, axum::extract::rejection::QueryRejection>,
) -> Result<Response, ApiError> {
    let Query(q) = query.map_err(|e| ApiError::BadRequest(e.body_text()))?;
    let (deck, ()) = state
        .mutate(&id, q.expected_revision, |d| d.delete_slide(&slide_id))
        .await?;
    Ok(canonical(StatusCode::OK, &deck))
}

async fn links(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    query: Result<Query<LinksQuery>, axum::extract::rejection::QueryRejection>,
) -> Result<Response, ApiError> {
    let Query(q) = query.map_err(|e| ApiError::BadRequest(e.body_text()))?;
    let s = state.snapshot(&id).await?;
    let links = s.deck.links_for(&q.slide)?;
    Ok(canonical(
        StatusCode::OK,
        &LinksResponse {
            slide: q.slide,
            links,
        },
    ))
}

async fn notebook(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<Response, ApiError> {
    let s = state.snapshot(&id).await?;
    Ok(canonical(StatusCode::OK, &notebook_overview(&s)))
}

async fn export(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    query: Result<Query<ExportQuery>, axum::extract::rejection::QueryRejection>,
) -> Result<Response, ApiError> {
    let Query(q) = query.map_err(|e| ApiError::BadRequest(e.body_text()))?;
    let format: DeckFormat = q.format.parse().map_err(ApiError::BadRequest)?;
    let s = state.snapshot(&id).await?;
    let archive = export_deck(&s.deck, format);
    let disposition = format!("attachment; filename=\"{id}.{}\"", format.extension());
    let mut resp = (StatusCode::OK, archive.payload).into_response();
    let headers = resp.headers_mut();
    headers.insert(
        header::CONTENT_TYPE,
        HeaderValue::from_static(format.content_type()),
    );
    if let Ok(v) = HeaderValue::from_str(&disposition) {
        headers.insert(header::CONTENT_DISPOSITION, v);
    }
    Ok(resp)
}

/// Bind and serve until ctrl-c.
pub async fn serve(addr: std::net::SocketAddr, app: Router) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
