use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use reqwest::StatusCode;
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;
use tokio::task::JoinSet;

use voxevo_core::protocol::{EvalError, EvaluationRequest, EvaluationResponse, Evaluator, RequestError};

use crate::server::Health;
use crate::{ServiceError, EVALUATE_PATH, HEALTH_PATH};

pub const DEFAULT_RETRY_LIMIT: usize = 3;
pub const DEFAULT_TIMEOUT_SECS: f64 = 120.0;

fn default_retry_limit() -> usize {
    DEFAULT_RETRY_LIMIT
}

fn default_timeout() -> f64 {
    DEFAULT_TIMEOUT_SECS
}

/// Evaluation servers to spread work over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServerPool {
    /// Base URLs such as `http://10.0.0.5:8080`.
    pub endpoints: Vec<String>,
    /// Concurrent requests per endpoint; defaults to the advertised worker count.
    #[serde(default)]
    pub max_in_flight: Option<usize>,
    /// Extra attempts after the first, each on the next endpoint.
    #[serde(default = "default_retry_limit")]
    pub retry_limit: usize,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
}

impl ServerPool {
    pub fn new(endpoints: Vec<String>) -> Self {
        Self { endpoints, max_in_flight: None, retry_limit: DEFAULT_RETRY_LIMIT, timeout_secs: DEFAULT_TIMEOUT_SECS }
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        if self.endpoints.is_empty() {
            return Err(ServiceError::Pool("at least one endpoint is required".into()));
        }
        if self.max_in_flight == Some(0) {
            return Err(ServiceError::Pool("max_in_flight must be at least 1".into()));
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(ServiceError::Pool("timeout_secs must be positive".into()));
        }
        Ok(())
    }
}

struct Endpoint {
    base: String,
    slots: Arc<Semaphore>,
}

/// Why one attempt failed.
enum Attempt {
    /// Worth retrying elsewhere.
    Retry(String),
    /// The request itself is bad; every server would refuse it.
    Rejected(RequestError),
}

/// Sends requests to a [`ServerPool`] with weighted round-robin endpoint
/// choice, per-endpoint concurrency limits and retry on the next endpoint.
pub struct Dispatcher {
    client: reqwest::Client,
    endpoints: Arc<Vec<Endpoint>>,
    /// Endpoint order for first attempts, each appearing once per unit of weight.
    schedule: Vec<usize>,
    cursor: AtomicUsize,
    retry_limit: usize,
}

/// Smooth weighted round-robin order over `weights`.
fn weighted_schedule(weights: &[usize]) -> Vec<usize> {
    let total: i64 = weights.iter().map(|&w| w as i64).sum();
    let mut current = vec![0i64; weights.len()];
    (0..total)
        .map(|_| {
            for (c, &w) in current.iter_mut().zip(weights) {
                *c += w as i64;
            }
            let pick = (0..weights.len()).max_by(|&a, &b| current[a].cmp(&current[b]).then(b.cmp(&a))).unwrap();
            current[pick] -= total;
            pick
        })
        .collect()
}

impl Dispatcher {
    /// Probes each endpoint's health for its worker count. Endpoints that do
    /// not answer stay in the pool with weight 1 so retries can route around
    /// them.
    pub async fn connect(pool: &ServerPool) -> Result<Self, ServiceError> {
        pool.validate()?;
        let client = reqwest::Client::builder().timeout(Duration::from_secs_f64(pool.timeout_secs)).build()?;
        let mut endpoints = Vec::new();
        let mut weights = Vec::new();
        for raw in &pool.endpoints {
            let base = raw.trim_end_matches('/').to_owned();
            let advertised = match probe(&client, &base).await {
                Ok(h) => Some(h.worker_count.max(1)),
                Err(e) => {
                    log::warn!("endpoint {base} did not answer its health check: {e}");
                    None
                }
            };
            let limit = pool.max_in_flight.or(advertised).unwrap_or(1);
            weights.push(advertised.unwrap_or(1));
            endpoints.push(Endpoint { base, slots: Arc::new(Semaphore::new(limit)) });
        }
        Ok(Self {
            client,
            endpoints: Arc::new(endpoints),
            schedule: weighted_schedule(&weights),
            cursor: AtomicUsize::new(0),
            retry_limit: pool.retry_limit,
        })
    }

    /// Resolves every request, returning responses in request order.
    /// Requests that fail on every attempt get a failed response with
    /// fitness 0. More than half failing aborts the whole batch.
    pub async fn dispatch_generation(
        &self,
        requests: &[EvaluationRequest],
    ) -> Result<Vec<EvaluationResponse>, EvalError> {
        let start = self.cursor.fetch_add(requests.len(), Ordering::SeqCst);
        let mut tasks = JoinSet::new();
        for (i, req) in requests.iter().enumerate() {
            let first = self.schedule[(start + i) % self.schedule.len()];
            let client = self.client.clone();
            let endpoints = self.endpoints.clone();
            let req = req.clone();
            let attempts = 1 + self.retry_limit;
            tasks.spawn(async move { (i, resolve(client, endpoints, req, first, attempts).await) });
        }
        let mut out: Vec<Option<EvaluationResponse>> = vec![None; requests.len()];
        let mut failed = 0;
        while let Some(joined) = tasks.join_next().await {
            let (i, result) = joined.map_err(|e| EvalError::Unavailable(format!("dispatch task failed: {e}")))?;
            match result {
                Ok(resp) => out[i] = Some(resp),
                Err(Attempt::Rejected(source)) => {
                    tasks.abort_all();
                    return Err(EvalError::Rejected { request_id: requests[i].request_id.clone(), source });
                }
                Err(Attempt::Retry(why)) => {
                    log::error!("request {} failed on every attempt: {why}", requests[i].request_id);
                    failed += 1;
                    out[i] = Some(EvaluationResponse::failed(&requests[i].request_id, ""));
                }
            }
        }
        if 2 * failed > requests.len() {
            return Err(EvalError::TooManyFailures { failed, total: requests.len() });
        }
        Ok(out.into_iter().map(|r| r.expect("every task reported")).collect())
    }
}

async fn probe(client: &reqwest::Client, base: &str) -> Result<Health, reqwest::Error> {
    client.get(format!("{base}{HEALTH_PATH}")).send().await?.error_for_status()?.json().await
}

async fn resolve(
    client: reqwest::Client,
    endpoints: Arc<Vec<Endpoint>>,
    req: EvaluationRequest,
    first: usize,
    attempts: usize,
) -> Result<EvaluationResponse, Attempt> {
    let mut last = String::new();
    for attempt in 0..attempts {
        let ep = &endpoints[(first + attempt) % endpoints.len()];
        let _slot = ep.slots.acquire().await.expect("semaphore never closes");
        match send(&client, &ep.base, &req).await {
            Ok(resp) => return Ok(resp),
            Err(Attempt::Rejected(e)) => return Err(Attempt::Rejected(e)),
            Err(Attempt::Retry(why)) => {
                log::warn!("request {} attempt {} on {} failed: {why}", req.request_id, attempt + 1, ep.base);
                last = why;
            }
        }
    }
    Err(Attempt::Retry(last))
}

async fn send(client: &reqwest::Client, base: &str, req: &EvaluationRequest) -> Result<EvaluationResponse, Attempt> {
    let resp = client
        .post(format!("{base}{EVALUATE_PATH}"))
        .json(req)
        .send()
        .await
        .map_err(|e| Attempt::Retry(e.to_string()))?;
    let status = resp.status();
    let body = resp.bytes().await.map_err(|e| Attempt::Retry(e.to_string()))?;
    if status == StatusCode::OK {
        let parsed: EvaluationResponse =
            serde_json::from_slice(&body).map_err(|e| Attempt::Retry(format!("unreadable response: {e}")))?;
        if parsed.request_id != req.request_id {
            return Err(Attempt::Retry(format!("response for {} instead of {}", parsed.request_id, req.request_id)));
        }
        return Ok(parsed);
    }
    let message = serde_json::from_slice::<serde_json::Value>(&body)
        .ok()
        .and_then(|v| v.get("error").and_then(|e| e.as_str()).map(str::to_owned))
        .unwrap_or_else(|| String::from_utf8_lossy(&body).into_owned());
    match status {
        StatusCode::BAD_REQUEST => Err(Attempt::Rejected(RequestError::Malformed(message))),
        StatusCode::UNPROCESSABLE_ENTITY => Err(Attempt::Rejected(RequestError::Invalid(message))),
        _ => Err(Attempt::Retry(format!("HTTP {status}: {message}"))),
    }
}

/// Blocking [`Evaluator`] over a [`Dispatcher`] with its own runtime.
pub struct RemoteEvaluator {
    runtime: tokio::runtime::Runtime,
    dispatcher: Dispatcher,
}

impl RemoteEvaluator {
    pub fn connect(pool: &ServerPool) -> Result<Self, ServiceError> {
        let runtime = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build()?;
        let dispatcher = runtime.block_on(Dispatcher::connect(pool))?;
        Ok(Self { runtime, dispatcher })
    }
}

impl Evaluator for RemoteEvaluator {
    fn evaluate(&self, requests: &[EvaluationRequest]) -> Result<Vec<EvaluationResponse>, EvalError> {
        self.runtime.block_on(self.dispatcher.dispatch_generation(requests))
    }
}
