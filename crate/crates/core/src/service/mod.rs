//! HTTP API over per-query sessions.
//!
//! | Method | Path              | Body                                          |
//! |--------|-------------------|-----------------------------------------------|
//! | GET    | `/api/models`     |                                               |
//! | POST   | `/api/retrieve`   | `{query, urls?, max_docs?}`                   |
//! | POST   | `/api/summarize`  | `{session_id, model, params?, questions?}`    |
//! | POST   | `/api/regenerate` | `{session_id, model, blueprint, params?}`     |
//! | POST   | `/api/filter`     | `{session_id, policy?}`                       |
//!
//! Errors come back as `{error_code, message, raw_output?}`.

mod api;
mod error;
mod session;

use std::future::Future;
use std::sync::Arc;
use std::time::Duration;

use axum::http::{header, HeaderValue, Method};
use axum::routing::{get, post};
use axum::Router;
use tokio::net::TcpListener;
use tower_http::cors::{AllowOrigin, CorsLayer};

use crate::engine::{Backends, MAX_INPUT_TOKENS};
use crate::retrieval::{Corpus, FetchLimits, RetrievalConfig};

pub use api::{
    FilterRequest, FilterResponse, ModelDescriptor, ModelsResponse, RegenerateRequest,
    RetrieveRequest, RetrieveResponse, SummarizeRequest,
};
pub use error::{ApiError, ErrorBody};
pub use session::{MemoryStore, Session, SessionIds, SessionSlot, SessionStore};

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub session_ttl: Duration,
    pub fetch_limits: FetchLimits,
    pub retrieval: RetrievalConfig,
    pub max_input_tokens: usize,
    /// Seed for session ids. Servers started with the same seed hand out the
    /// same id sequence.
    pub session_seed: u64,
    /// Allowed browser origin; any origin when unset.
    pub cors_origin: Option<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            session_ttl: Duration::from_secs(30 * 60),
            fetch_limits: FetchLimits::default(),
            retrieval: RetrievalConfig::default(),
            max_input_tokens: MAX_INPUT_TOKENS,
            session_seed: 0,
            cors_origin: None,
        }
    }
}

pub struct Inner {
    pub backends: Backends,
    pub corpus: Option<Arc<Corpus>>,
    pub config: ServiceConfig,
    pub store: Arc<dyn SessionStore>,
    pub ids: SessionIds,
}

/// Shared handler state.
#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl std::ops::Deref for AppState {
    type Target = Inner;

    fn deref(&self) -> &Inner {
        &self.0
    }
}

impl AppState {
    pub fn new(backends: Backends, corpus: Option<Corpus>, config: ServiceConfig) -> Self {
        let store = Arc::new(MemoryStore::new(config.session_ttl));
        Self::with_store(backends, corpus, config, store)
    }

    pub fn with_store(
        backends: Backends,
        corpus: Option<Corpus>,
        config: ServiceConfig,
        store: Arc<dyn SessionStore>,
    ) -> Self {
        let ids = SessionIds::new(config.session_seed);
        AppState(Arc::new(Inner {
            backends,
            corpus: corpus.map(Arc::new),
            config,
            store,
            ids,
        }))
    }
}

fn cors(origin: Option<&str>) -> CorsLayer {
    let allow = match origin.and_then(|o| HeaderValue::from_str(o).ok()) {
        Some(value) => AllowOrigin::exact(value),
        None => AllowOrigin::any(),
    };
    CorsLayer::new()
        .allow_origin(allow)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE])
}

pub fn router(state: AppState) -> Router {
    let cors = cors(state.config.cors_origin.as_deref());
    Router::new()
        .route("/api/models", get(api::models))
        .route("/api/retrieve", post(api::retrieve_documents))
        .route("/api/summarize", post(api::summarize))
        .route("/api/regenerate", post(api::regenerate))
        .route("/api/filter", post(api::filter))
        .layer(cors)
        .with_state(state)
}

/// Serves the API on `listener` until `shutdown` resolves, evicting idle
/// sessions in the background.
pub async fn serve(
    listener: TcpListener,
    state: AppState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let store = state.store.clone();
    let period =
        (state.config.session_ttl / 2).clamp(Duration::from_millis(10), Duration::from_secs(60));
    let sweeper = tokio::spawn(async move {
        let mut tick = tokio::time::interval(period);
        loop {
            tick.tick().await;
            let evicted = store.sweep();
            if evicted > 0 {
                tracing::debug!(evicted, "evicted idle sessions");
            }
        }
    });
    let result = axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await;
    sweeper.abort();
    result
}
