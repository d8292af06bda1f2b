//! Displacement and volume objectives and their scalarisation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simulator::{SimStatus, SimulationResult};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid fitness config: {0}")]
pub struct FitnessConfigError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitnessMode {
    DisplacementOnly,
    #[default]
    Combined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitnessConfig {
    /// Displacement, in voxel edges, that earns a full displacement score.
    pub delta_max: f64,
    /// Voxel capacity of the lattice.
    pub upsilon_max: usize,
    pub mode: FitnessMode,
    pub clamp_delta: bool,
}

impl Default for FitnessConfig {
    fn default() -> Self {
        Self { delta_max: 20.0, upsilon_max: 448, mode: FitnessMode::Combined, clamp_delta: true }
    }
}

impl FitnessConfig {
    pub fn validate(&self) -> Result<(), FitnessConfigError> {
        if !(self.delta_max.is_finite() && self.delta_max > 0.0) {
            return Err(FitnessConfigError(format!("delta_max must be finite and > 0, got {}", self.delta_max)));
        }
        if self.upsilon_max == 0 {
            return Err(FitnessConfigError("upsilon_max must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessValue {
    pub value: f64,
    pub delta_score: f64,
    pub nu_score: f64,
}

impl FitnessValue {
    pub const ZERO: Self = Self { value: 0.0, delta_score: 0.0, nu_score: 0.0 };
}

pub fn displacement_score(delta: f64, cfg: &FitnessConfig) -> f64 {
    let d = delta / cfg.delta_max;
    if cfg.clamp_delta {
        d.clamp(0.0, 1.0)
    } else {
        d
    }
}

pub fn volume_score(count: usize, cfg: &FitnessConfig) -> f64 {
    1.0 - count as f64 / cfg.upsilon_max as f64
}

/// Scores a displacement / voxel-count pair, independent of status.
pub fn score(delta: f64, count: usize, cfg: &FitnessConfig) -> FitnessValue {
    let delta_score = displacement_score(delta, cfg);
    let nu_score = volume_score(count, cfg);
    let value = match cfg.mode {
        FitnessMode::Combined => 0.5 * delta_score + 0.5 * nu_score,
        FitnessMode::DisplacementOnly => delta,
    };
    FitnessValue { value, delta_score, nu_score }
}

/// Zero for any result that did not complete normally.
pub fn combined_fitness(result: &SimulationResult, cfg: &FitnessConfig) -> FitnessValue {
    if result.status != SimStatus::Ok {
        return FitnessValue::ZERO;
    }
    score(result.displacement, result.voxel_count, cfg)
}
