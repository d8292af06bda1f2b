//! Self-contained evaluation requests and responses, shared by the in-process
//! evaluator and the HTTP service.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fitness::{combined_fitness, FitnessConfig, FitnessValue};
use crate::morphology::{Morphology, MorphologyJson};
use crate::simulator::{simulate, ControllerScenario, SimConfig, SimStatus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationRequest {
    pub request_id: String,
    pub morphology: MorphologyJson,
    pub scenario: ControllerScenario,
    pub sim_config: SimConfig,
    pub fitness_config: FitnessConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseStatus {
    Ok,
    Unstable,
    InvalidMorphology,
    Error,
}

impl From<SimStatus> for ResponseStatus {
    fn from(s: SimStatus) -> Self {
        match s {
            SimStatus::Ok => Self::Ok,
            SimStatus::Unstable => Self::Unstable,
            SimStatus::InvalidMorphology => Self::InvalidMorphology,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationResponse {
    pub request_id: String,
    pub status: ResponseStatus,
    pub displacement: f64,
    pub voxel_count: usize,
    pub fitness: f64,
    pub delta_score: f64,
    pub nu_score: f64,
    pub server_id: String,
    pub compute_ms: u64,
}

impl EvaluationResponse {
    /// Placeholder for a request that could not be evaluated anywhere.
    pub fn failed(request_id: &str, server_id: &str) -> Self {
        Self {
            request_id: request_id.to_owned(),
            status: ResponseStatus::Error,
            displacement: 0.0,
            voxel_count: 0,
            fitness: 0.0,
            delta_score: 0.0,
            nu_score: 0.0,
            server_id: server_id.to_owned(),
            compute_ms: 0,
        }
    }

    /// Equality on everything except who computed it and how long it took.
    pub fn same_outcome(&self, other: &Self) -> bool {
        self.request_id == other.request_id
            && self.status == other.status
            && self.displacement.to_bits() == other.displacement.to_bits()
            && self.voxel_count == other.voxel_count
            && self.fitness.to_bits() == other.fitness.to_bits()
            && self.delta_score.to_bits() == other.delta_score.to_bits()
            && self.nu_score.to_bits() == other.nu_score.to_bits()
    }

    pub fn fitness_value(&self) -> FitnessValue {
        FitnessValue { value: self.fitness, delta_score: self.delta_score, nu_score: self.nu_score }
    }
}

/// Why a request was refused before simulation.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RequestError {
    /// Not parseable as JSON at all.
    #[error("malformed request: {0}")]
    Malformed(String),
    /// Well-formed JSON that violates the request schema or its invariants.
    #[error("invalid request: {0}")]
    Invalid(String),
}

impl RequestError {
    pub fn http_status(&self) -> u16 {
        match self {
            RequestError::Malformed(_) => 400,
            RequestError::Invalid(_) => 422,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("request {request_id} rejected: {source}")]
    Rejected { request_id: String, source: RequestError },
    #[error("{failed} of {total} evaluations failed")]
    TooManyFailures { failed: usize, total: usize },
    #[error("evaluator unavailable: {0}")]
    Unavailable(String),
}

pub fn parse_request(body: &[u8]) -> Result<EvaluationRequest, RequestError> {
    let req: EvaluationRequest = serde_json::from_slice(body).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => RequestError::Invalid(e.to_string()),
        _ => RequestError::Malformed(e.to_string()),
    })?;
    validate_request(&req)?;
    Ok(req)
}

/// Checks request invariants and decodes its morphology.
pub fn validate_request(req: &EvaluationRequest) -> Result<Morphology, RequestError> {
    let invalid = |e: &dyn std::fmt::Display| RequestError::Invalid(e.to_string());
    if req.request_id.is_empty() {
        return Err(RequestError::Invalid("request_id must not be empty".into()));
    }
    req.sim_config.validate().map_err(|e| invalid(&e))?;
    req.fitness_config.validate().map_err(|e| invalid(&e))?;
    let m = Morphology::from_wire(&req.morphology).map_err(|e| invalid(&e))?;
    if m.dims().volume() != req.fitness_config.upsilon_max {
        return Err(RequestError::Invalid(format!(
            "upsilon_max {} does not match lattice volume {}",
            req.fitness_config.upsilon_max,
            m.dims().volume()
        )));
    }
    Ok(m)
}

/// Validates, simulates and scores one request.
pub fn evaluate_request(req: &EvaluationRequest, server_id: &str) -> Result<EvaluationResponse, RequestError> {
    let started = Instant::now();
    let m = validate_request(req)?;
    let result = simulate(&m, &req.scenario, &req.sim_config).map_err(|e| RequestError::Invalid(e.to_string()))?;
    let score = combined_fitness(&result, &req.fitness_config);
    Ok(EvaluationResponse {
        request_id: req.request_id.clone(),
        status: result.status.into(),
        displacement: result.displacement,
        voxel_count: result.voxel_count,
        fitness: score.value,
        delta_score: score.delta_score,
        nu_score: score.nu_score,
        server_id: server_id.to_owned(),
        compute_ms: started.elapsed().as_millis() as u64,
    })
}

/// Anything that can turn a batch of requests into responses, in order.
pub trait Evaluator: Send + Sync {
    fn evaluate(&self, requests: &[EvaluationRequest]) -> Result<Vec<EvaluationResponse>, EvalError>;
}

/// In-process evaluation on the rayon pool.
#[derive(Debug, Clone)]
pub struct LocalEvaluator {
    server_id: String,
}

impl Default for LocalEvaluator {
    fn default() -> Self {
        Self { server_id: "local".into() }
    }
}

impl LocalEvaluator {
    pub fn new(server_id: impl Into<String>) -> Self {
        Self { server_id: server_id.into() }
    }
}

impl Evaluator for LocalEvaluator {
    fn evaluate(&self, requests: &[EvaluationRequest]) -> Result<Vec<EvaluationResponse>, EvalError> {
        requests
            .par_iter()
            .map(|r| {
                evaluate_request(r, &self.server_id)
                    .map_err(|source| EvalError::Rejected { request_id: r.request_id.clone(), source })
            })
            .collect()
    }
}

/// Evaluates one morphology under each scenario, in the given order.
pub fn evaluate_batch(
    m: &Morphology,
    scenarios: &[ControllerScenario],
    sim_config: &SimConfig,
    fitness_config: &FitnessConfig,
    evaluator: &dyn Evaluator,
) -> Result<Vec<(EvaluationResponse, FitnessValue)>, EvalError> {
    let wire = m.to_wire();
    let requests: Vec<EvaluationRequest> = scenarios
        .iter()
        .enumerate()
        .map(|(i, s)| EvaluationRequest {
            request_id: format!("batch-{i}-s{}", s.scenario_id),
            morphology: wire.clone(),
            scenario: *s,
            sim_config: sim_config.clone(),
            fitness_config: fitness_config.clone(),
        })
        .collect();
    if requests.is_empty() {
        return Ok(Vec::new());
    }
    let responses = evaluator.evaluate(&requests)?;
    Ok(responses
        .into_iter()
        .map(|r| {
            let f = r.fitness_value();
            (r, f)
        })
        .collect())
}
