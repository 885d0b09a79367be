//! JSON-over-HTTP API around the `chardiff` engine.
//!
//! | Method | Path | |
//! |---|---|---|
//! | POST | `/sessions` | multipart `source`, `target`, `key`, optional `type_hints` |
//! | GET | `/sessions/{id}` | schema and run ids |
//! | GET | `/sessions/{id}/shortlist?target=&threshold=` | attribute shortlist |
//! | POST | `/sessions/{id}/runs` | run the search, JSON [`RunRequest`] body |
//! | GET | `/sessions/{id}/runs/{run_id}` | a stored run |
//! | GET | `/sessions/{id}/runs/{run_id}/summaries/{rank}/partitions` | partition rectangles |
//!
//! Errors are `{code, message, detail}` with a 4xx status.

mod error;
mod handlers;
mod store;
mod views;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::DefaultBodyLimit;
use axum::routing::{get, post};
use axum::Router;
use tower_http::cors::CorsLayer;

pub use error::{ApiError, ApiResult, ErrorBody};
pub use handlers::{config_for, SessionCreated, SessionInfo};
pub use store::{new_id, Run, RunRequest, Session, SessionStore};
pub use views::{partition_views, CtView, PartitionView, Rect, RunView, SummaryView, UNCOVERED};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    /// Upload size limit in bytes.
    pub max_upload_bytes: usize,
    /// Runs enumerating more candidates are refused.
    pub candidate_budget: u128,
    pub persist_dir: Option<PathBuf>,
    /// Allow any origin, for local UI development.
    pub permissive_cors: bool,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            max_upload_bytes: 16 * 1024 * 1024,
            candidate_budget: 10_000,
            persist_dir: None,
            permissive_cors: false,
        }
    }
}

pub struct AppState {
    pub store: SessionStore,
    pub config: ServiceConfig,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> std::io::Result<Self> {
        let store = match &config.persist_dir {
            Some(dir) => SessionStore::persistent(dir)?,
            None => SessionStore::in_memory(),
        };
        Ok(AppState { store, config })
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    let limit = state.config.max_upload_bytes;
    let cors = state.config.permissive_cors;
    let app = Router::new()
        .route("/sessions", post(handlers::create_session))
        .route("/sessions/{id}", get(handlers::get_session))
        .route("/sessions/{id}/shortlist", get(handlers::shortlist))
        .route("/sessions/{id}/runs", post(handlers::create_run))
        .route("/sessions/{id}/runs/{run_id}", get(handlers::get_run))
        .route(
            "/sessions/{id}/runs/{run_id}/summaries/{rank}/partitions",
            get(handlers::partitions),
        )
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state);
    if cors {
        app.layer(CorsLayer::permissive())
    } else {
        app
    }
}

/// Bind and serve until the process is stopped.
pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let bind = config.bind;
    let state = Arc::new(AppState::new(config)?);
    let listener = tokio::net::TcpListener::bind(bind).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
