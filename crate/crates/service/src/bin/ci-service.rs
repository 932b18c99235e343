use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use ciflow_service::{router, system_clock, Store};
use clap::Parser;

/// Serve annotation tasks over HTTP.
#[derive(Parser)]
#[command(name = "ci-service", version)]
struct Args {
    /// Directory holding the record log (`log.jsonl`).
    #[arg(long, default_value = "ci-data")]
    data: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
}

#[tokio::main]
async fn main() -> ExitCode {
    let args = Args::parse();
    if let Err(e) = std::fs::create_dir_all(&args.data) {
        eprintln!("error: {}: {e}", args.data.display());
        return ExitCode::FAILURE;
    }
    let store = match Store::open(&args.data.join("log.jsonl"), system_clock()) {
        Ok(s) => Arc::new(s),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let listener = match tokio::net::TcpListener::bind(args.listen).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: cannot listen on {}: {e}", args.listen);
            return ExitCode::FAILURE;
        }
    };
    eprintln!("listening on http://{} ({} records loaded)", args.listen, store.record_count());
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    match axum::serve(listener, router(store)).with_graceful_shutdown(shutdown).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
