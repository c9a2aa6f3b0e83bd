use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use clap::Parser;
use field_atlas::{service, Engine, ServiceConfig};
use tracing_subscriber::EnvFilter;

/// Local Field Atlas service.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// TOML config file.
    #[arg(long, env = "ATLAS_CONFIG")]
    config: Option<PathBuf>,
    /// Overrides the configured listen address.
    #[arg(long)]
    listen: Option<SocketAddr>,
    /// Overrides the configured data directory.
    #[arg(long, env = "ATLAS_DATA_DIR")]
    data_dir: Option<PathBuf>,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let args = Args::parse();
    let mut config = match &args.config {
        Some(p) => ServiceConfig::load(p)?,
        None => ServiceConfig::default(),
    };
    if let Some(l) = args.listen {
        config.listen = l;
    }
    if let Some(d) = args.data_dir {
        config.data_dir = d;
    }
    let listen = config.listen;
    if !listen.ip().is_loopback() {
        tracing::warn!(%listen, "listening on a non-loopback address; the API has no authentication");
    }
    let engine = Arc::new(tokio::task::spawn_blocking(move || Engine::open(config)).await??);
    let listener = tokio::net::TcpListener::bind(listen)
        .await
        .map_err(|e| anyhow::anyhow!("cannot bind {listen}: {e}"))?;
    tracing::info!(addr = %listener.local_addr()?, "atlasd listening");
    axum::serve(listener, service::router(engine))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
