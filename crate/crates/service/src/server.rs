use std::future::Future;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tokio::sync::{oneshot, Semaphore};

use voxevo_core::protocol::{evaluate_request, parse_request, RequestError};

use crate::{ServiceError, EVALUATE_PATH, HEALTH_PATH};

pub fn default_worker_count() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServerConfig {
    pub worker_count: usize,
    /// Requests allowed to wait for a worker; defaults to 4 per worker.
    pub queue_bound: Option<usize>,
    pub server_id: String,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self { worker_count: default_worker_count(), queue_bound: None, server_id: "server".into() }
    }
}

impl ServerConfig {
    fn queue_bound(&self) -> usize {
        self.queue_bound.unwrap_or(4 * self.worker_count)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub worker_count: usize,
    pub queue_depth: usize,
    pub in_flight: usize,
    /// Most simulations ever running at once.
    pub peak_in_flight: usize,
    pub completed: u64,
    pub server_id: String,
    pub version: String,
}

struct Shared {
    cfg: ServerConfig,
    workers: Arc<Semaphore>,
    /// Requests admitted and not yet answered, running or queued.
    admitted: AtomicUsize,
    in_flight: AtomicUsize,
    peak: AtomicUsize,
    completed: AtomicU64,
}

impl Shared {
    fn health(&self) -> Health {
        let in_flight = self.in_flight.load(Ordering::SeqCst);
        Health {
            status: "ok".into(),
            worker_count: self.cfg.worker_count,
            queue_depth: self.admitted.load(Ordering::SeqCst).saturating_sub(in_flight),
            in_flight,
            peak_in_flight: self.peak.load(Ordering::SeqCst),
            completed: self.completed.load(Ordering::SeqCst),
            server_id: self.cfg.server_id.clone(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

/// Releases an admission slot when the request finishes or is dropped.
struct Admission(Arc<Shared>);

impl Drop for Admission {
    fn drop(&mut self) {
        self.0.admitted.fetch_sub(1, Ordering::SeqCst);
    }
}

/// Marks one simulation as running for its lifetime.
struct Running(Arc<Shared>);

impl Running {
    fn start(shared: Arc<Shared>) -> Self {
        let now = shared.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        shared.peak.fetch_max(now, Ordering::SeqCst);
        Self(shared)
    }
}

impl Drop for Running {
    fn drop(&mut self) {
        self.0.in_flight.fetch_sub(1, Ordering::SeqCst);
        self.0.completed.fetch_add(1, Ordering::SeqCst);
    }
}

fn error_response(status: StatusCode, message: String) -> Response {
    (status, Json(serde_json::json!({ "error": message }))).into_response()
}

fn rejection(e: RequestError) -> Response {
    let status = StatusCode::from_u16(e.http_status()).expect("valid status");
    let message = match e {
        RequestError::Malformed(m) | RequestError::Invalid(m) => m,
    };
    error_response(status, message)
}

async fn evaluate(State(shared): State<Arc<Shared>>, body: Bytes) -> Response {
    let req = match parse_request(&body) {
        Ok(r) => r,
        Err(e) => return rejection(e),
    };
    let capacity = shared.cfg.worker_count + shared.cfg.queue_bound();
    if shared.admitted.fetch_add(1, Ordering::SeqCst) >= capacity {
        shared.admitted.fetch_sub(1, Ordering::SeqCst);
        return error_response(StatusCode::SERVICE_UNAVAILABLE, "queue full".into());
    }
    let admission = Admission(shared.clone());
    let permit = shared.workers.clone().acquire_owned().await.expect("semaphore never closes");
    let running = Running::start(shared.clone());
    let server_id = shared.cfg.server_id.clone();
    // The permit and counters travel with the blocking job so they are only
    // released once the simulation really ends.
    let job = tokio::task::spawn_blocking(move || {
        let out = evaluate_request(&req, &server_id);
        drop((running, permit, admission));
        out
    });
    match job.await {
        Ok(Ok(resp)) => Json(resp).into_response(),
        Ok(Err(e)) => rejection(e),
        Err(e) => error_response(StatusCode::INTERNAL_SERVER_ERROR, format!("evaluation panicked: {e}")),
    }
}

async fn health(State(shared): State<Arc<Shared>>) -> Json<Health> {
    Json(shared.health())
}

/// A bound, not yet running, evaluation server.
pub struct Server {
    listener: TcpListener,
    shared: Arc<Shared>,
}

impl Server {
    pub async fn bind(addr: &str, cfg: ServerConfig) -> Result<Self, ServiceError> {
        if cfg.worker_count == 0 {
            return Err(ServiceError::Pool("worker_count must be at least 1".into()));
        }
        let listener =
            TcpListener::bind(addr).await.map_err(|source| ServiceError::Bind { addr: addr.into(), source })?;
        let shared = Arc::new(Shared {
            workers: Arc::new(Semaphore::new(cfg.worker_count)),
            cfg,
            admitted: AtomicUsize::new(0),
            in_flight: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
            completed: AtomicU64::new(0),
        });
        Ok(Self { listener, shared })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.listener.local_addr().expect("bound listener has an address")
    }

    fn router(&self) -> Router {
        Router::new()
            .route(EVALUATE_PATH, post(evaluate))
            .route(HEALTH_PATH, get(health))
            .with_state(self.shared.clone())
    }

    /// Serves until `shutdown` resolves, then stops accepting connections and
    /// waits for in-flight requests to finish.
    pub async fn run_until<F>(self, shutdown: F) -> Result<(), ServiceError>
    where
        F: Future<Output = ()> + Send + 'static,
    {
        let app = self.router();
        axum::serve(self.listener, app).with_graceful_shutdown(shutdown).await?;
        Ok(())
    }
}

/// A server running on its own runtime thread, for tests and embedding.
pub struct BackgroundServer {
    addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<Result<(), ServiceError>>>,
}

impl BackgroundServer {
    pub fn spawn(addr: &str, cfg: ServerConfig) -> Result<Self, ServiceError> {
        let runtime = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build()?;
        let server = runtime.block_on(Server::bind(addr, cfg))?;
        let addr = server.local_addr();
        let (stop, stopped) = oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            runtime.block_on(server.run_until(async {
                let _ = stopped.await;
            }))
        });
        Ok(Self { addr, stop: Some(stop), thread: Some(thread) })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Begins a graceful shutdown without waiting for it.
    pub fn request_shutdown(&mut self) {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
    }

    /// Shuts down gracefully and waits for in-flight work.
    pub fn shutdown(mut self) -> Result<(), ServiceError> {
        self.request_shutdown();
        self.thread.take().map_or(Ok(()), |t| t.join().expect("server thread panicked"))
    }
}

impl Drop for BackgroundServer {
    fn drop(&mut self) {
        self.request_shutdown();
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}
