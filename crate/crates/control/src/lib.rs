//! HTTP control surface for a running episode.
//!
//! | method | path      | body                       |
//! |--------|-----------|----------------------------|
//! | GET    | `/state`  | optional `?agent=<id>`     |
//! | POST   | `/chat`   | `{sender, team, text}`     |
//! | POST   | `/pause`  |                            |
//! | POST   | `/resume` |                            |
//!
//! Every response is JSON. Errors come back as `{"error": "..."}` with a 4xx
//! or 5xx status. The server only forwards commands to the episode through a
//! [`ControlHandle`]; it never touches the world or memory itself.

use std::io;
use std::net::SocketAddr;
use std::thread;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use pact_core::runtime::{ControlCommand, ControlError, ControlHandle};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::oneshot;

pub const DEFAULT_ADDR: &str = "127.0.0.1:7878";

#[derive(Debug, Deserialize)]
pub struct ChatBody {
    pub sender: String,
    pub team: String,
    pub text: String,
}

#[derive(Debug, Deserialize)]
struct StateQuery {
    agent: Option<String>,
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<ControlError> for ApiError {
    fn from(e: ControlError) -> Self {
        let status = match e {
            ControlError::Rejected(_) => StatusCode::BAD_REQUEST,
            ControlError::Closed => StatusCode::CONFLICT,
            ControlError::Timeout => StatusCode::GATEWAY_TIMEOUT,
        };
        ApiError(status, e.to_string())
    }
}

async fn forward(handle: ControlHandle, command: ControlCommand) -> Result<Json<Value>, ApiError> {
    tokio::task::spawn_blocking(move || handle.send(command))
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .map(Json)
        .map_err(ApiError::from)
}

async fn state(State(handle): State<ControlHandle>, Query(q): Query<StateQuery>) -> Result<Json<Value>, ApiError> {
    match q.agent {
        Some(agent) => forward(handle, ControlCommand::Snapshot { agent: Some(agent) }).await,
        None => Ok(Json(handle.state())),
    }
}

async fn chat(
    State(handle): State<ControlHandle>,
    body: Result<Json<ChatBody>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let Json(body) = body.map_err(|e| ApiError(StatusCode::BAD_REQUEST, e.body_text()))?;
    if body.text.trim().is_empty() {
        return Err(ApiError(StatusCode::BAD_REQUEST, "chat text is empty".into()));
    }
    forward(handle, ControlCommand::InjectChat { sender: body.sender, team: body.team, text: body.text }).await
}

async fn pause(State(handle): State<ControlHandle>) -> Result<Json<Value>, ApiError> {
    forward(handle, ControlCommand::Pause).await
}

async fn resume(State(handle): State<ControlHandle>) -> Result<Json<Value>, ApiError> {
    forward(handle, ControlCommand::Resume).await
}

pub fn router(handle: ControlHandle) -> Router {
    Router::new()
        .route("/state", get(state))
        .route("/chat", post(chat))
        .route("/pause", post(pause))
        .route("/resume", post(resume))
        .with_state(handle)
}

/// A server running on its own thread. Dropping it shuts the server down.
pub struct Server {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<thread::JoinHandle<()>>,
}

impl Server {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn stop(mut self) {
        self.shutdown_now();
    }

    fn shutdown_now(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        self.shutdown_now();
    }
}

/// Binds `addr` (port 0 picks a free port) and serves in the background.
pub fn serve(addr: &str, handle: ControlHandle) -> io::Result<Server> {
    let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build()?;
    let listener = rt.block_on(tokio::net::TcpListener::bind(addr))?;
    let bound = listener.local_addr()?;
    let (tx, rx) = oneshot::channel::<()>();
    let app = router(handle);
    let thread = thread::spawn(move || {
        rt.block_on(async move {
            let _ = axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await;
        });
    });
    Ok(Server { addr: bound, shutdown: Some(tx), thread: Some(thread) })
}
