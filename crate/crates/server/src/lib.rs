//! Session service: upload a mesh over HTTP, then edit it over a WebSocket.
//!
//! HTTP:
//! - `POST /session` with an OBJ body (optional query `depth`, `resolution`,
//!   `mode`) returns `{id, revision, patch_count}`.
//! - `GET /session/{id}/export.obj` returns the current tessellation.
//! - `GET /session/{id}/defects.csv` returns the standard versus modified table.
//!
//! WebSocket `GET /session/{id}/ws`: the server first sends a full update.
//! Clients send edit messages (`{"revision", "op", ...}`) or `{"op":"sync"}`.
//! Each update is a JSON text frame `{"type":"update", ...}` immediately
//! followed by one binary frame with the tessellation buffers; failures are
//! `{"type":"error", "error", "message", "revision"}`.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use uuid::Uuid;

use patchsmith::analysis::Mode;
use patchsmith::pipeline::PipelineConfig;
use patchsmith::session::{EditMessage, Session, SessionError, UpdateMessage};

type Shared = Arc<Mutex<Session>>;

#[derive(Clone, Default)]
pub struct AppState {
    sessions: Arc<Mutex<HashMap<Uuid, Shared>>>,
}

impl AppState {
    fn session(&self, id: &str) -> Option<Shared> {
        let id = Uuid::parse_str(id).ok()?;
        self.sessions.lock().expect("session table lock").get(&id).cloned()
    }
}

fn not_found() -> Response {
    (StatusCode::NOT_FOUND, "no such session").into_response()
}

/// The service routes; `assets` (if any) is served for every other path.
pub fn router(state: AppState, assets: Option<PathBuf>) -> Router {
    let router = Router::new()
        .route("/session", post(create_session))
        .route("/session/{id}/export.obj", get(export_obj))
        .route("/session/{id}/defects.csv", get(defects_csv))
        .route("/session/{id}/ws", get(connect))
        .with_state(state);
    match assets {
        Some(dir) => router.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => router,
    }
}

#[derive(Debug, Deserialize)]
struct CreateQuery {
    depth: Option<u32>,
    resolution: Option<usize>,
    mode: Option<Mode>,
}

async fn create_session(State(state): State<AppState>, Query(q): Query<CreateQuery>, body: Bytes) -> Response {
    let defaults = PipelineConfig::default();
    let config = PipelineConfig {
        max_depth: q.depth.unwrap_or(defaults.max_depth),
        leaf_resolution: q.resolution.unwrap_or(defaults.leaf_resolution),
        mode: q.mode.unwrap_or(defaults.mode),
        ..defaults
    };
    let built = tokio::task::spawn_blocking(move || Session::from_obj(&body, config)).await.expect("session build task");
    match built {
        Ok(session) => {
            let id = Uuid::new_v4();
            let reply = serde_json::json!({ "id": id.to_string(), "revision": session.revision(), "patch_count": session.patches().len() });
            state.sessions.lock().expect("session table lock").insert(id, Arc::new(Mutex::new(session)));
            (StatusCode::CREATED, Json(reply)).into_response()
        }
        Err(e) => (StatusCode::UNPROCESSABLE_ENTITY, e.to_string()).into_response(),
    }
}

async fn export_obj(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    match state.session(&id) {
        Some(s) => {
            let bytes = s.lock().expect("session lock").export_obj();
            ([(header::CONTENT_TYPE, "model/obj")], bytes).into_response()
        }
        None => not_found(),
    }
}

async fn defects_csv(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    let Some(s) = state.session(&id) else {
        return not_found();
    };
    let csv = tokio::task::spawn_blocking(move || s.lock().expect("session lock").defects_csv()).await.expect("analysis task");
    ([(header::CONTENT_TYPE, "text/csv")], csv).into_response()
}

async fn connect(State(state): State<AppState>, Path(id): Path<String>, ws: WebSocketUpgrade) -> Response {
    match state.session(&id) {
        Some(s) => ws.on_upgrade(move |socket| serve_socket(socket, s)),
        None => not_found(),
    }
}

fn error_frame(e: &SessionError, revision: u64) -> Message {
    let text = e.to_string();
    let name = text.split(':').next().unwrap_or("Error").to_owned();
    let body = serde_json::json!({ "type": "error", "error": name, "message": text, "revision": revision });
    Message::Text(body.to_string().into())
}

async fn send_update(socket: &mut WebSocket, update: UpdateMessage) -> Result<(), axum::Error> {
    let mut body = serde_json::to_value(&update).expect("update serializes");
    body["type"] = "update".into();
    socket.send(Message::Text(body.to_string().into())).await?;
    socket.send(Message::Binary(update.buffers.into())).await
}

/// What one client message produces.
enum Reply {
    Update(UpdateMessage),
    Error(SessionError, u64),
}

fn handle(session: &Shared, text: &str) -> Reply {
    let mut s = session.lock().expect("session lock");
    let value: serde_json::Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => return Reply::Error(SessionError::Edit(format!("bad message: {e}")), s.revision()),
    };
    if value.get("op").and_then(|o| o.as_str()) == Some("sync") {
        return Reply::Update(s.full_sync());
    }
    let edit: EditMessage = match serde_json::from_value(value) {
        Ok(e) => e,
        Err(e) => return Reply::Error(SessionError::Edit(format!("bad edit: {e}")), s.revision()),
    };
    match s.apply_edit(&edit) {
        Ok(update) => Reply::Update(update),
        Err(e) => Reply::Error(e, s.revision()),
    }
}

async fn serve_socket(mut socket: WebSocket, session: Shared) {
    let first = {
        let s = session.clone();
        tokio::task::spawn_blocking(move || s.lock().expect("session lock").full_sync()).await.expect("sync task")
    };
    if send_update(&mut socket, first).await.is_err() {
        return;
    }
    while let Some(Ok(msg)) = socket.recv().await {
        let text = match msg {
            Message::Text(t) => t.to_string(),
            Message::Close(_) => break,
            _ => continue,
        };
        let s = session.clone();
        // Edits are serialized by the session lock and run off the async workers.
        let reply = tokio::task::spawn_blocking(move || handle(&s, &text)).await.expect("edit task");
        let sent = match reply {
            Reply::Update(u) => send_update(&mut socket, u).await,
            Reply::Error(e, rev) => socket.send(error_frame(&e, rev)).await,
        };
        if sent.is_err() {
            break;
        }
    }
}
