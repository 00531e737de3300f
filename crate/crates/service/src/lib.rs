//! Live-session HTTP service for CorrDuel.
//!
//! An operator opens a session over a catalog of arms, fetches the proposed
//! pair, reports which arm won (or a tie) and inspects the active set. Every
//! state change is appended to a per-session JSONL log, and the server
//! rebuilds its sessions from those logs on startup.
//!
//! Routes:
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/sessions` | open a session |
//! | GET | `/sessions/{id}/proposal` | current pair, or the completed payload |
//! | POST | `/sessions/{id}/outcome` | `{"winner": 3}` or `{"tie": true}` |
//! | GET | `/sessions/{id}/state` | active arms, win rates, confidence radius |
//! | GET | `/sessions/{id}/events` | the full event log |

pub mod api;
pub mod error;
pub mod event;
pub mod session;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

pub use api::{router, CreateRequest, OutcomeRequest};
pub use error::{Result, ServiceError};
pub use event::{ArmEntry, EventKind, SessionEvent, SimilaritySource};
pub use session::{
    Command, CommandResult, LiveSession, Outcome, OutcomeReport, ProposalView, SessionSpec,
    StateView,
};
pub use store::{replay_file, SessionStore, StoreConfig};

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub listen: SocketAddr,
    pub data_dir: PathBuf,
    pub server_seed: u64,
}

/// Recovers persisted sessions and serves until Ctrl-C.
pub async fn serve(config: ServerConfig) -> std::io::Result<()> {
    let store = SessionStore::open(StoreConfig {
        data_dir: Some(config.data_dir.clone()),
        server_seed: config.server_seed,
    })
    .map_err(std::io::Error::other)?;
    tracing::info!(sessions = store.len(), dir = %config.data_dir.display(), "session store ready");
    let listener = tokio::net::TcpListener::bind(config.listen).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(Arc::new(store)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
