//! Command-line front end and HTTP service for the bandeau planner.

pub mod service;
pub mod store;

use std::net::SocketAddr;
use std::sync::Arc;

pub use service::router;
pub use store::Store;

/// Serves the API on `addr` until the process is stopped.
pub async fn serve(addr: SocketAddr, store: Store) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(store))).await?;
    Ok(())
}
