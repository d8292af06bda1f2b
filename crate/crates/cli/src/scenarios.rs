use voxevo_core::simulator::phase_offset;
use voxevo_core::{ControllerScenario, LatticeDims};

/// Phase table for every lattice point of `count` scenarios from `first`.
pub fn offset_table(master_seed: u64, first: u32, count: u32, dims: LatticeDims) -> String {
    let mut out = String::from("scenario_id,x,y,z,phase\n");
    for scenario_id in first..first.saturating_add(count) {
        let s = ControllerScenario { master_seed, scenario_id };
        for i in 0..dims.volume() {
            let (x, y, z) = dims.coords(i);
            let phase = phase_offset(&s, dims, x, y, z).expect("index within lattice");
            out.push_str(&format!("{scenario_id},{x},{y},{z},{phase:?}\n"));
        }
    }
    out
}

/// Parses `NXxNYxNZ`, e.g. `8x8x7`.
pub fn parse_dims(s: &str) -> Result<LatticeDims, String> {
    let parts: Vec<&str> = s.split(['x', 'X', ',']).collect();
    let [nx, ny, nz] = parts[..] else {
        return Err(format!("expected NXxNYxNZ, got {s}"));
    };
    let n = |p: &str| p.trim().parse::<usize>().map_err(|e| format!("{p}: {e}"));
    LatticeDims::new(n(nx)?, n(ny)?, n(nz)?).map_err(|e| e.to_string())
}
