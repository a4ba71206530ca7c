use std::net::SocketAddr;
use std::time::Duration;

use clap::Parser;
use predbridge_service::{router, ServiceConfig};

#[derive(Parser, Debug)]
#[command(version, about = "Serve the predicate induction API over HTTP")]
struct Args {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Request body cap in megabytes.
    #[arg(long, default_value_t = 50)]
    max_upload_mb: usize,
    /// Per-query compute budget in seconds.
    #[arg(long, default_value_t = 30)]
    query_timeout_secs: u64,
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let app = router(ServiceConfig {
        max_upload_bytes: args.max_upload_mb * 1024 * 1024,
        query_timeout: Duration::from_secs(args.query_timeout_secs),
    });
    let listener = tokio::net::TcpListener::bind(args.addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app).await
}
