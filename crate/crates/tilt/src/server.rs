//! Local stepping service. Every state is returned in canonical JSON, and
//! a session's workspace is always its origin replayed through its history.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tilt_core::{Move, Workspace, CLOCK};

use crate::{fixtures, json, load_workspace};

/// Upper bound on moves added by one clock request.
pub const MAX_CLOCK_MOVES: usize = 1 << 20;

#[derive(Clone, Debug)]
pub struct Session {
    pub id: String,
    pub origin: Workspace,
    pub workspace: Workspace,
    pub history: Vec<Move>,
}

impl Session {
    pub fn new(id: String, origin: Workspace) -> Self {
        Session { id, workspace: origin.clone(), origin, history: Vec::new() }
    }

    pub fn apply(&mut self, moves: &[Move]) {
        self.workspace = self.workspace.apply_sequence(moves);
        self.history.extend_from_slice(moves);
    }

    /// Drops the last move and replays the rest from the origin.
    pub fn undo(&mut self) -> bool {
        if self.history.pop().is_none() {
            return false;
        }
        self.workspace = self.origin.apply_sequence(&self.history);
        true
    }

    fn view(&self) -> Value {
        json!({
            "id": self.id,
            "state": json::to_value(&self.workspace),
            "history": self.history.iter().map(|m| m.token().to_string()).collect::<Vec<_>>(),
        })
    }
}

#[derive(Default)]
pub struct AppState {
    // Each session has its own lock so requests to one session are
    // serialized while others proceed.
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    next: AtomicU64,
    catalog: std::sync::OnceLock<Value>,
}

impl AppState {
    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .lock()
            .expect("session table")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("no session {id}")))
    }
}

pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

fn bad(msg: impl Into<String>) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, msg.into())
}

#[derive(Deserialize)]
struct CreateReq {
    /// Canonical JSON object, or TWF or JSON text.
    workspace: Value,
}

#[derive(Deserialize)]
struct MoveReq {
    #[serde(rename = "move")]
    token: String,
}

#[derive(Deserialize)]
struct ClockReq {
    cycles: usize,
}

async fn create(State(st): State<Arc<AppState>>, Json(req): Json<CreateReq>) -> Result<Json<Value>, ApiError> {
    let w = match req.workspace {
        Value::String(text) => load_workspace(&text).map_err(|e| bad(e.to_string()))?,
        v => json::from_value(v).map_err(|e| bad(e.to_string()))?,
    };
    let id = format!("s{}", st.next.fetch_add(1, Ordering::Relaxed) + 1);
    let s = Session::new(id.clone(), w);
    let body = json!({ "id": id, "state": json::to_value(&s.workspace) });
    st.sessions.lock().expect("session table").insert(id, Arc::new(Mutex::new(s)));
    Ok(Json(body))
}

async fn show(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let s = st.session(&id)?;
    let s = s.lock().expect("session");
    Ok(Json(s.view()))
}

async fn step(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(req): Json<MoveReq>,
) -> Result<Json<Value>, ApiError> {
    let s = st.session(&id)?;
    let mut chars = req.token.chars();
    let m = match (chars.next(), chars.next()) {
        (Some(c), None) => Move::from_token(c),
        _ => None,
    }
    .ok_or_else(|| bad(format!("illegal move {:?}, expected one of u d l r", req.token)))?;
    let mut s = s.lock().expect("session");
    s.apply(&[m]);
    Ok(Json(s.view()))
}

async fn undo(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let s = st.session(&id)?;
    let mut s = s.lock().expect("session");
    s.undo();
    Ok(Json(s.view()))
}

async fn clock(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(req): Json<ClockReq>,
) -> Result<Json<Value>, ApiError> {
    let s = st.session(&id)?;
    if req.cycles.saturating_mul(CLOCK.len()) > MAX_CLOCK_MOVES {
        return Err(bad(format!("at most {} cycles per request", MAX_CLOCK_MOVES / CLOCK.len())));
    }
    let seq: Vec<Move> = CLOCK.iter().copied().cycle().take(req.cycles * CLOCK.len()).collect();
    let mut s = s.lock().expect("session");
    s.apply(&seq);
    Ok(Json(s.view()))
}

async fn gadgets(State(st): State<Arc<AppState>>) -> Json<Value> {
    let cat = st.catalog.get_or_init(|| {
        json!({
            "clock": CLOCK.iter().map(|m| m.token().to_string()).collect::<Vec<_>>(),
            "fixtures": fixtures::all().iter().map(|f| f.to_json()).collect::<Vec<_>>(),
        })
    });
    Json(cat.clone())
}

pub fn router() -> Router {
    Router::new()
        .route("/api/sessions", post(create))
        .route("/api/sessions/{id}", get(show))
        .route("/api/sessions/{id}/moves", post(step))
        .route("/api/sessions/{id}/undo", post(undo))
        .route("/api/sessions/{id}/clock", post(clock))
        .route("/api/gadgets", get(gadgets))
        .with_state(Arc::new(AppState::default()))
}

/// Serves on localhost until the process is stopped.
pub async fn serve(port: u16) -> std::io::Result<()> {
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router()).await
}
