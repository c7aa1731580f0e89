//! HTTP API over a loaded network snapshot.
//!
//! | route | |
//! |---|---|
//! | `GET /api/search?molecule=&method=&page=&page_size=` | one page of ranked authors |
//! | `GET /api/molecules/{name}` | aliases and interaction neighbors |
//! | `POST /api/admin/precompute` | fill the PageRank store |
//! | `GET /api/health` | revision and node counts |
//!
//! Search pages are cached per (snapshot, revision, molecule, method, page,
//! page size). Whether a response came from the cache and how long it took
//! are reported in the `X-Cache` and `X-Compute-Ms` headers so that the body
//! of a cached page is byte-identical to the original.

pub mod api;
pub mod cache;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};
use std::time::Duration;

use axum::http::{HeaderValue, Method};
use axum::routing::{get, post};
use axum::Router;
use synergy_core::pathrank::PagerankStore;
use synergy_core::{MultilayerGraph, PagerankConfig, Snapshot};
use tokio::sync::Semaphore;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

use cache::PageCache;

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub cache_ttl: Duration,
    pub cache_capacity: usize,
    /// Searches computed at the same time; the rest wait for a slot.
    pub compute_concurrency: usize,
    /// Allowed CORS origins; `*` allows any.
    pub cors_origins: Vec<String>,
    pub pagerank: PagerankConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            cache_ttl: Duration::from_secs(3600),
            cache_capacity: 10_000,
            compute_concurrency: 4,
            cors_origins: vec!["*".into()],
            pagerank: PagerankConfig::default(),
        }
    }
}

/// An installed snapshot and its PageRank store.
pub struct Loaded {
    pub graph: Snapshot,
    pub store: PagerankStore,
    pub generation: u64,
}

struct Shared {
    config: ServiceConfig,
    current: RwLock<Option<Arc<Loaded>>>,
    generation: AtomicU64,
    cache: PageCache,
    permits: Semaphore,
}

#[derive(Clone)]
pub struct AppState(Arc<Shared>);

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        Self(Arc::new(Shared {
            cache: PageCache::new(config.cache_capacity, config.cache_ttl),
            permits: Semaphore::new(config.compute_concurrency.max(1)),
            current: RwLock::new(None),
            generation: AtomicU64::new(0),
            config,
        }))
    }

    /// Replace the served snapshot. Requests already running keep the one
    /// they started with.
    pub fn install(&self, graph: MultilayerGraph, store: PagerankStore) {
        let generation = self.0.generation.fetch_add(1, Ordering::SeqCst) + 1;
        let loaded = Arc::new(Loaded {
            graph: graph.into_snapshot(),
            store,
            generation,
        });
        *self.0.current.write().unwrap() = Some(loaded);
        self.0.cache.clear();
        tracing::info!(generation, "snapshot installed");
    }

    pub fn current(&self) -> Option<Arc<Loaded>> {
        self.0.current.read().unwrap().clone()
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.0.config
    }

    pub fn cache(&self) -> &PageCache {
        &self.0.cache
    }

    fn permits(&self) -> &Semaphore {
        &self.0.permits
    }
}

fn cors(origins: &[String]) -> CorsLayer {
    let layer = CorsLayer::new()
        .allow_methods([Method::GET, Method::POST])
        .allow_headers(Any)
        .expose_headers(Any);
    if origins.iter().any(|o| o == "*") {
        return layer.allow_origin(Any);
    }
    let list: Vec<HeaderValue> = origins.iter().filter_map(|o| HeaderValue::from_str(o).ok()).collect();
    layer.allow_origin(AllowOrigin::list(list))
}

pub fn router(state: AppState) -> Router {
    let cors = cors(&state.config().cors_origins);
    Router::new()
        .route("/api/search", get(api::search))
        .route("/api/molecules/{name}", get(api::molecule))
        .route("/api/admin/precompute", post(api::admin_precompute))
        .route("/api/health", get(api::health))
        .layer(cors)
        .with_state(state)
}

/// Serve until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    tracing::info!(addr = ?listener.local_addr().ok(), "listening");
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}
