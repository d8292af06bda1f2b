#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voxevo_core::protocol::EvaluationRequest;
use voxevo_core::{ControllerScenario, FitnessConfig, LatticeDims, Morphology, SimConfig, VoxelState};

pub fn dims() -> LatticeDims {
    LatticeDims::new(3, 3, 2).unwrap()
}

/// A shortened schedule so HTTP tests stay fast.
pub fn quick_sim() -> SimConfig {
    SimConfig { settle_duration: 0.05, run_duration: 0.2, ..SimConfig::default() }
}

pub fn random_body(rng: &mut ChaCha8Rng, d: LatticeDims) -> Morphology {
    loop {
        let grid = (0..d.volume())
            .map(|_| match rng.random_range(0..10) {
                0..4 => VoxelState::Empty,
                4..7 => VoxelState::Active,
                _ => VoxelState::Passive,
            })
            .collect();
        let m = Morphology::from_grid(d, grid).unwrap().largest_component();
        if m.voxel_count() >= 2 {
            return m;
        }
    }
}

pub fn request(id: &str, m: &Morphology, scenario_id: u32, sim: &SimConfig) -> EvaluationRequest {
    EvaluationRequest {
        request_id: id.into(),
        morphology: m.to_wire(),
        scenario: ControllerScenario { master_seed: 77, scenario_id },
        sim_config: sim.clone(),
        fitness_config: FitnessConfig { upsilon_max: m.dims().volume(), ..FitnessConfig::default() },
    }
}

pub fn fixtures(n: usize, seed: u64, sim: &SimConfig) -> Vec<EvaluationRequest> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| request(&format!("fx-{i}"), &random_body(&mut rng, dims()), i as u32, sim)).collect()
}

/// A request that keeps one worker busy for a while.
pub fn slow_request(id: &str) -> EvaluationRequest {
    let d = LatticeDims::new(4, 4, 3).unwrap();
    request(id, &Morphology::full(d, VoxelState::Active), 0, &SimConfig { run_duration: 4.0, ..SimConfig::default() })
}
