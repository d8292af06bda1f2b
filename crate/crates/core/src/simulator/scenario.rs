use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::morphology::LatticeDims;

/// One assignment of actuation phases to every lattice coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerScenario {
    pub master_seed: u64,
    pub scenario_id: u32,
}

#[inline]
pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Phase in `[0, 2π)` for the voxel at `(x, y, z)`. Keyed only by the seed,
/// scenario and coordinate, so every morphology sees the same field.
pub fn phase_offset(scenario: &ControllerScenario, dims: LatticeDims, x: usize, y: usize, z: usize) -> Result<f64, SimError> {
    if !dims.contains(x, y, z) {
        return Err(SimError::OutsideLattice { x, y, z });
    }
    let mut h = splitmix64(scenario.master_seed);
    for word in [scenario.scenario_id as u64, x as u64, y as u64, z as u64] {
        h = splitmix64(h ^ word);
    }
    let unit = (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    let phase = unit * TAU;
    Ok(if phase < TAU { phase } else { TAU.next_down() })
}
