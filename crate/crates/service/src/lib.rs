//! HTTP/JSON facade over exploration sessions.
//!
//! | method | path | body / query | success |
//! |---|---|---|---|
//! | POST | `/sessions` | [`CreateSession`] | 201 [`ApiSession`] |
//! | GET | `/sessions` | | ids |
//! | GET | `/sessions/{id}` | | [`ApiSession`] |
//! | DELETE | `/sessions/{id}` | | 204 |
//! | PUT | `/sessions/{id}/hypothesis` | `HypothesisSpec` | [`ApiSession`] |
//! | GET | `/sessions/{id}/view` | `samples=k` | `ViewState` |
//! | POST | `/sessions/{id}/tiles` | `{rows, tau}` | 201 [`TileCreated`] |
//! | GET | `/sessions/{id}/pcp` | `rows=` or `where=`, `tau=` | `PcpPayload` |
//! | GET | `/sessions/{id}/crosstab` | `col=`, `rows=` or `where=` | `Crosstab` |
//! | POST | `/sessions/{id}/gains` | [`GainsRequest`] | `GainTable` |
//! | GET | `/sessions/{id}/export` | | `SessionDocument` |
//!
//! Row indices are 0-based everywhere in the API.

pub mod error;
pub mod handlers;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::http::HeaderValue;
use axum::routing::{get, post, put};
use axum::Router;
use tower_http::cors::{Any, CorsLayer};
use tower_http::services::ServeDir;

pub use error::{ApiError, ApiResult};
pub use handlers::{ApiPair, ApiSession, GainsRequest, TileCreated};
pub use store::{CreateSession, ManifestSource, Store, StoreConfig};

#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    pub store: StoreConfig,
    /// Directory holding the static UI bundle served under `/ui`.
    pub ui_dir: Option<PathBuf>,
    /// Allowed CORS origin; any origin when unset.
    pub cors_origin: Option<String>,
}

pub fn router(store: Arc<Store>, config: &ServiceConfig) -> Router {
    let cors = match config.cors_origin.as_deref().and_then(|o| HeaderValue::from_str(o).ok()) {
        Some(origin) => CorsLayer::new().allow_origin(origin),
        None => CorsLayer::new().allow_origin(Any),
    }
    .allow_methods(Any)
    .allow_headers(Any);
    let api = Router::new()
        .route("/health", get(handlers::health))
        .route("/sessions", post(handlers::create_session).get(handlers::list_sessions))
        .route("/sessions/{id}", get(handlers::get_session).delete(handlers::delete_session))
        .route("/sessions/{id}/hypothesis", put(handlers::put_hypothesis))
        .route("/sessions/{id}/view", get(handlers::get_view))
        .route("/sessions/{id}/tiles", post(handlers::post_tile))
        .route("/sessions/{id}/pcp", get(handlers::get_pcp))
        .route("/sessions/{id}/crosstab", get(handlers::get_crosstab))
        .route("/sessions/{id}/gains", post(handlers::post_gains))
        .route("/sessions/{id}/export", get(handlers::export));
    let api = match &config.ui_dir {
        Some(dir) => api.nest_service("/ui", ServeDir::new(dir).append_index_html_on_directories(true)),
        None => api.route("/ui", get(handlers::ui_placeholder)),
    };
    api.layer(cors).with_state(store)
}

/// Binds `addr`, restores persisted sessions and serves until the process ends.
pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    let store = Arc::new(Store::new(config.store.clone()));
    let (restored, failed) = store.restore();
    if !restored.is_empty() {
        eprintln!("restored {} sessions", restored.len());
    }
    for (path, reason) in failed {
        eprintln!("could not restore {}: {reason}", path.display());
    }
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(store, &config)).await
}
