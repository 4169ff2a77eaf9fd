//! HTTP API over screening sessions.
//!
//! Sessions are held in a [`SessionStore`]. Writes (`next`, `labels`,
//! `continue`) run under a per-session lock; reads (`stats`, `export`,
//! `error-checks`, `metrics`) use the snapshot published after the last
//! write, so they never observe a half-applied submission. With a data
//! directory, sessions survive restarts.

pub mod api;
pub mod error;
pub mod store;

use std::net::SocketAddr;
use std::sync::Arc;

pub use api::router;
pub use error::ApiError;
pub use store::{SessionEntry, SessionStore};

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Store(#[from] fastscreen_core::Error),

    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },

    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

/// Serves `store` on `addr` until Ctrl-C.
pub async fn serve(addr: SocketAddr, store: SessionStore) -> Result<(), ServeError> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServeError::Bind { addr, source })?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(store)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
