use std::io::Write as _;

use voxevo_service::{Server, ServerConfig, ServiceError};

use crate::CliError;

/// Resolves on Ctrl-C or, on Unix, SIGTERM.
async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(e) => {
                log::warn!("cannot watch SIGTERM: {e}");
                std::future::pending::<()>().await;
            }
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
    log::info!("shutting down; waiting for in-flight evaluations");
}

/// Serves until a shutdown signal, then drains in-flight work.
/// Prints `listening on <addr>` once bound.
pub fn serve(bind: &str, cfg: ServerConfig) -> Result<(), CliError> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Other(format!("cannot start runtime: {e}")))?;
    runtime.block_on(async {
        let workers = cfg.worker_count;
        let server = Server::bind(bind, cfg).await.map_err(|e| match e {
            ServiceError::Bind { addr, source } => CliError::Bind { addr, reason: source.to_string() },
            other => CliError::Config(other.to_string()),
        })?;
        println!("listening on {} with {workers} workers", server.local_addr());
        let _ = std::io::stdout().flush();
        server.run_until(shutdown_signal()).await.map_err(|e| CliError::Other(e.to_string()))
    })
}
