//! The evaluation service: a stateless HTTP server wrapping the simulator
//! and a client that spreads a generation's requests over several servers.

mod client;
mod error;
mod server;

pub use client::{Dispatcher, RemoteEvaluator, ServerPool, DEFAULT_RETRY_LIMIT, DEFAULT_TIMEOUT_SECS};
pub use error::ServiceError;
pub use server::{default_worker_count, BackgroundServer, Health, Server, ServerConfig};

pub const EVALUATE_PATH: &str = "/api/v1/evaluate";
pub const HEALTH_PATH: &str = "/api/v1/health";
