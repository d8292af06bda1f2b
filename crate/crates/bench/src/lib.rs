//! Shared fixtures for the criterion benchmarks.

use voxevo_core::{LatticeDims, Morphology, VoxelState};

/// A solid slab with alternating active/passive columns.
pub fn striped_slab(nx: usize, ny: usize, nz: usize) -> Morphology {
    let dims = LatticeDims::new(nx, ny, nz).expect("positive extents");
    let mut m = Morphology::empty(dims);
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let state = if (x + y) % 2 == 0 { VoxelState::Active } else { VoxelState::Passive };
                m.set(x, y, z, state);
            }
        }
    }
    m
}
