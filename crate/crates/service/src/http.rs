//! HTTP transport. Bodies are JSON; errors use [`ErrorBody`](crate::ErrorBody).

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::engine::Engine;
use crate::error::ApiError;
use crate::wire::{LoadRequest, SearchRequest, SimulateRequest, SnapshotInfo, WIRE_VERSION};

#[derive(Clone)]
struct AppState {
    engine: Arc<Engine>,
    /// Relative corpus paths in topologies resolve against this directory.
    base: Arc<PathBuf>,
}

#[derive(Serialize)]
struct ServiceInfo {
    service: &'static str,
    wire_version: u32,
    snapshot: Option<SnapshotInfo>,
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::invalid(format!("malformed request body: {e}")))
}

/// Runs CPU-bound work off the async workers.
async fn blocking<T, F>(f: F) -> Result<Json<T>, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
        .map(Json)
}

async fn info(State(s): State<AppState>) -> Json<ServiceInfo> {
    Json(ServiceInfo {
        service: "sensorsift",
        wire_version: WIRE_VERSION,
        snapshot: s.engine.snapshot().ok().map(|s| s.info()),
    })
}

async fn search(State(s): State<AppState>, body: Bytes) -> Result<impl axum::response::IntoResponse, ApiError> {
    let req: SearchRequest = parse(&body)?;
    blocking(move || s.engine.search(&req)).await
}

async fn sensor(
    State(s): State<AppState>,
    Path(uid): Path<String>,
) -> Result<impl axum::response::IntoResponse, ApiError> {
    s.engine.sensor(&uid).map(Json)
}

async fn properties(State(s): State<AppState>) -> impl axum::response::IntoResponse {
    Json(s.engine.properties())
}

async fn load(State(s): State<AppState>, body: Bytes) -> Result<impl axum::response::IntoResponse, ApiError> {
    let req: LoadRequest = parse(&body)?;
    blocking(move || s.engine.load(&req)).await
}

async fn simulate(State(s): State<AppState>, body: Bytes) -> Result<impl axum::response::IntoResponse, ApiError> {
    let req: SimulateRequest = parse(&body)?;
    blocking(move || s.engine.simulate(&req, &s.base)).await
}

async fn topology(State(s): State<AppState>, body: Bytes) -> Result<impl axum::response::IntoResponse, ApiError> {
    let file = parse(&body)?;
    s.engine.set_topology(&file).map(Json)
}

pub fn router(engine: Arc<Engine>, base: PathBuf) -> Router {
    Router::new()
        .route("/", get(info))
        .route("/search", post(search))
        .route("/sensors/{uid}", get(sensor))
        .route("/properties", get(properties))
        .route("/corpus/load", post(load))
        .route("/simulate", post(simulate))
        .route("/topology", post(topology))
        .with_state(AppState {
            engine,
            base: Arc::new(base),
        })
}

/// Serves until Ctrl-C.
pub async fn serve(addr: SocketAddr, engine: Arc<Engine>, base: PathBuf) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(engine, base))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
