//! HTTP/JSON front end for the route store, simulator and error analysis.
//!
//! | method | path                              | body / query                  |
//! |--------|-----------------------------------|-------------------------------|
//! | GET    | `/paths`                          |                               |
//! | POST   | `/paths`                          | route record                  |
//! | GET    | `/paths/{id}`                     |                               |
//! | PUT    | `/paths/{id}`                     | route record                  |
//! | DELETE | `/paths/{id}`                     |                               |
//! | GET    | `/paths/{id}/details`             |                               |
//! | POST   | `/paths/{id}/simulate`            | `SimulateRequest`             |
//! | GET    | `/paths/{id}/simulate/stream`     | `StreamQuery`, NDJSON frames  |
//! | GET    | `/paths/{id}/simulate/state`      | `StreamQuery` + `frame`       |
//! | POST   | `/paths/{id}/analysis`            | `AnalysisRequest`             |
//! | GET    | `/tasks`                          | task codes, labels, colors    |

mod error;
mod handlers;

use std::collections::HashSet;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::routing::get;
use axum::Router;
use skyroute_core::geodesy::GeodesyMode;
use skyroute_core::store::{RouteStore, StoreError};

pub use error::{ApiError, ErrorCode};
pub use handlers::{AnalysisRequest, SimulateRequest, StreamQuery};

pub const ENV_PORT: &str = "SKYROUTE_PORT";
pub const ENV_BIND: &str = "SKYROUTE_BIND";
pub const ENV_STORE: &str = "SKYROUTE_STORE";
pub const ENV_MODE: &str = "SKYROUTE_MODE";

pub const DEFAULT_PORT: u16 = 8080;

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    /// Store file; `None` keeps routes in memory.
    pub store: Option<PathBuf>,
    /// Geodesy mode for simulations that do not name one.
    pub default_mode: GeodesyMode,
    /// Geodesy mode for analyses that do not name one.
    pub analysis_mode: GeodesyMode,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: SocketAddr::from(([127, 0, 0, 1], DEFAULT_PORT)),
            store: None,
            default_mode: GeodesyMode::Corrected,
            analysis_mode: GeodesyMode::Legacy,
        }
    }
}

impl ServiceConfig {
    /// Reads `SKYROUTE_BIND`, `SKYROUTE_PORT`, `SKYROUTE_STORE` and
    /// `SKYROUTE_MODE` through `lookup`, falling back to defaults.
    pub fn from_lookup(lookup: impl Fn(&str) -> Option<String>) -> Result<Self, String> {
        let mut config = ServiceConfig::default();
        if let Some(bind) = lookup(ENV_BIND) {
            config.bind.set_ip(
                bind.parse()
                    .map_err(|e| format!("{ENV_BIND}={bind}: {e}"))?,
            );
        }
        if let Some(port) = lookup(ENV_PORT) {
            config.bind.set_port(
                port.parse()
                    .map_err(|e| format!("{ENV_PORT}={port}: {e}"))?,
            );
        }
        config.store = lookup(ENV_STORE)
            .filter(|s| !s.is_empty())
            .map(PathBuf::from);
        if let Some(mode) = lookup(ENV_MODE) {
            config.default_mode = mode
                .parse()
                .map_err(|e| format!("{ENV_MODE}={mode}: {e}"))?;
        }
        Ok(config)
    }

    pub fn from_env() -> Result<Self, String> {
        Self::from_lookup(|key| std::env::var(key).ok())
    }

    pub fn open_store(&self) -> Result<RouteStore, StoreError> {
        match &self.store {
            Some(file) => RouteStore::open(file),
            None => Ok(RouteStore::in_memory()),
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<RouteStore>,
    pub default_mode: GeodesyMode,
    pub analysis_mode: GeodesyMode,
    streams: Arc<Mutex<HashSet<String>>>,
}

impl AppState {
    pub fn new(store: RouteStore, config: &ServiceConfig) -> Self {
        AppState {
            store: Arc::new(store),
            default_mode: config.default_mode,
            analysis_mode: config.analysis_mode,
            streams: Arc::default(),
        }
    }

    /// Marks a stream active for `route_id`; `None` if one already is.
    fn claim_stream(&self, route_id: &str) -> Option<StreamClaim> {
        let mut active = self.streams.lock().expect("stream registry poisoned");
        active.insert(route_id.to_string()).then(|| StreamClaim {
            streams: Arc::clone(&self.streams),
            route_id: route_id.to_string(),
        })
    }
}

/// Releases the route's stream slot when dropped.
struct StreamClaim {
    streams: Arc<Mutex<HashSet<String>>>,
    route_id: String,
}

impl Drop for StreamClaim {
    fn drop(&mut self) {
        if let Ok(mut active) = self.streams.lock() {
            active.remove(&self.route_id);
        }
    }
}

pub fn router(state: AppState) -> Router {
    use axum::routing::post;
    Router::new()
        .route(
            "/paths",
            get(handlers::list_paths).post(handlers::create_path),
        )
        .route(
            "/paths/{id}",
            get(handlers::get_path)
                .put(handlers::put_path)
                .delete(handlers::delete_path),
        )
        .route("/paths/{id}/details", get(handlers::path_details))
        .route("/paths/{id}/simulate", post(handlers::simulate_path))
        .route(
            "/paths/{id}/simulate/stream",
            get(handlers::stream_simulation),
        )
        .route(
            "/paths/{id}/simulate/state",
            get(handlers::simulation_state),
        )
        .route("/paths/{id}/analysis", post(handlers::analyze_path))
        .route("/tasks", get(handlers::task_legend))
        .with_state(state)
}

pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let store = config
        .open_store()
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    let app = router(AppState::new(store, &config));
    let listener = tokio::net::TcpListener::bind(config.bind).await?;
    axum::serve(listener, app).await
}
