//! Mass-spring soft-body simulation of voxel morphologies.
//!
//! Every occupied voxel corner is a point mass, shared between neighbouring
//! voxels. Voxel edges carry structural springs and voxel faces carry two
//! diagonal shear springs. Springs touching active voxels have their rest
//! length modulated by the mean of those voxels' sinusoids once the settle
//! phase is over.

mod body;
mod config;
mod scenario;

pub use body::SoftBody;
pub use config::{DisplacementMode, SimConfig};
pub use scenario::{phase_offset, ControllerScenario};
pub(crate) use scenario::splitmix64;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::morphology::Morphology;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulator config: {0}")]
    Config(String),
    #[error("coordinate ({x}, {y}, {z}) outside lattice")]
    OutsideLattice { x: usize, y: usize, z: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimStatus {
    Ok,
    Unstable,
    InvalidMorphology,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    /// In voxel-edge lengths.
    pub displacement: f64,
    pub voxel_count: usize,
    pub settled_com: [f64; 3],
    pub final_com: [f64; 3],
    pub status: SimStatus,
}

impl SimulationResult {
    fn degenerate(voxel_count: usize, status: SimStatus) -> Self {
        Self { displacement: 0.0, voxel_count, settled_com: [0.0; 3], final_com: [0.0; 3], status }
    }

    pub fn com_shift(&self) -> [f64; 3] {
        std::array::from_fn(|i| self.final_com[i] - self.settled_com[i])
    }
}

/// Runs the settle + actuation schedule with phase offsets from `scenario`.
pub fn simulate(m: &Morphology, scenario: &ControllerScenario, cfg: &SimConfig) -> Result<SimulationResult, SimError> {
    let dims = m.dims();
    simulate_with_phases(m, cfg, |x, y, z| {
        phase_offset(scenario, dims, x, y, z).expect("voxel inside its own lattice")
    })
}

/// As [`simulate`], with an explicit phase field over lattice coordinates.
pub fn simulate_with_phases<F>(m: &Morphology, cfg: &SimConfig, phases: F) -> Result<SimulationResult, SimError>
where
    F: Fn(usize, usize, usize) -> f64,
{
    cfg.validate()?;
    let voxel_count = m.voxel_count();
    if voxel_count < 2 || !m.is_connected() {
        return Ok(SimulationResult::degenerate(voxel_count, SimStatus::InvalidMorphology));
    }
    let mut body = SoftBody::new(m, cfg, phases);
    let settle_steps = cfg.settle_steps();
    let run_steps = cfg.run_steps();
    if !body.advance(settle_steps, false) {
        return Ok(SimulationResult::degenerate(voxel_count, SimStatus::Unstable));
    }
    let settled_com = body.com();
    if !body.advance(run_steps, cfg.actuation_enabled) {
        return Ok(SimulationResult::degenerate(voxel_count, SimStatus::Unstable));
    }
    let final_com = body.com();
    let mut shift: [f64; 3] = std::array::from_fn(|i| final_com[i] - settled_com[i]);
    if cfg.displacement_mode == DisplacementMode::Planar {
        shift[2] = 0.0;
    }
    let displacement = (shift[0] * shift[0] + shift[1] * shift[1] + shift[2] * shift[2]).sqrt() / cfg.voxel_edge;
    Ok(SimulationResult { displacement, voxel_count, settled_com, final_com, status: SimStatus::Ok })
}
