//! Voxel morphologies on a fixed lattice: decoding from a query function,
//! connectivity repair and the run-length-encoded JSON exchange format.
//!
//! Grids are stored x-fastest: `index = x + nx * (y + ny * z)`.

use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MorphologyError {
    #[error("index {index} outside lattice axis of size {size}")]
    OutOfRange { index: usize, size: usize },
    #[error("lattice dimensions must all be >= 1, got {0:?}")]
    BadDims([usize; 3]),
    #[error("malformed voxel string: {0}")]
    Encoding(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeDims {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Default for LatticeDims {
    fn default() -> Self {
        Self { nx: 8, ny: 8, nz: 7 }
    }
}

impl LatticeDims {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Result<Self, MorphologyError> {
        let d = Self { nx, ny, nz };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), MorphologyError> {
        if self.nx == 0 || self.ny == 0 || self.nz == 0 {
            return Err(MorphologyError::BadDims([self.nx, self.ny, self.nz]));
        }
        Ok(())
    }

    /// Maximum voxel count, `nx * ny * nz`.
    pub fn volume(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.nx * (y + self.ny * z)
    }

    #[inline]
    pub fn coords(&self, i: usize) -> (usize, usize, usize) {
        (i % self.nx, (i / self.nx) % self.ny, i / (self.nx * self.ny))
    }

    pub fn contains(&self, x: usize, y: usize, z: usize) -> bool {
        x < self.nx && y < self.ny && z < self.nz
    }
}

/// Maps lattice index `i` on an axis of `n` cells onto `[-1, 1]`.
pub fn normalize_coord(i: usize, n: usize) -> Result<f64, MorphologyError> {
    if i >= n {
        return Err(MorphologyError::OutOfRange { index: i, size: n });
    }
    if n == 1 {
        return Ok(0.0);
    }
    Ok(2.0 * i as f64 / (n - 1) as f64 - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoxelState {
    Empty,
    Passive,
    Active,
}

impl VoxelState {
    fn symbol(self) -> char {
        match self {
            VoxelState::Empty => 'E',
            VoxelState::Passive => 'P',
            VoxelState::Active => 'A',
        }
    }

    fn from_symbol(c: char) -> Option<Self> {
        match c {
            'E' => Some(VoxelState::Empty),
            'P' => Some(VoxelState::Passive),
            'A' => Some(VoxelState::Active),
            _ => None,
        }
    }

    pub fn is_filled(self) -> bool {
        self != VoxelState::Empty
    }
}

/// Where a morphology came from. Not part of the exchange format.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Provenance {
    pub genome_id: Option<u64>,
    pub decoder: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Morphology {
    dims: LatticeDims,
    grid: Vec<VoxelState>,
    pub provenance: Provenance,
}

/// Wire form: `{"dims": [nx, ny, nz], "voxels": "<run-length string>"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorphologyJson {
    pub dims: [usize; 3],
    pub voxels: String,
}

impl Morphology {
    pub fn empty(dims: LatticeDims) -> Self {
        Self { dims, grid: vec![VoxelState::Empty; dims.volume()], provenance: Provenance::default() }
    }

    pub fn full(dims: LatticeDims, state: VoxelState) -> Self {
        Self { dims, grid: vec![state; dims.volume()], provenance: Provenance::default() }
    }

    pub fn from_grid(dims: LatticeDims, grid: Vec<VoxelState>) -> Result<Self, MorphologyError> {
        dims.validate()?;
        if grid.len() != dims.volume() {
            return Err(MorphologyError::Encoding(format!(
                "grid has {} cells, lattice needs {}",
                grid.len(),
                dims.volume()
            )));
        }
        Ok(Self { dims, grid, provenance: Provenance::default() })
    }

    pub fn dims(&self) -> LatticeDims {
        self.dims
    }

    pub fn grid(&self) -> &[VoxelState] {
        &self.grid
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> VoxelState {
        self.grid[self.dims.index(x, y, z)]
    }

    pub fn set(&mut self, x: usize, y: usize, z: usize, s: VoxelState) {
        let i = self.dims.index(x, y, z);
        self.grid[i] = s;
    }

    /// Number of non-empty voxels.
    pub fn voxel_count(&self) -> usize {
        self.grid.iter().filter(|s| s.is_filled()).count()
    }

    pub fn active_count(&self) -> usize {
        self.grid.iter().filter(|&&s| s == VoxelState::Active).count()
    }

    /// Iterates filled voxels as `((x, y, z), state)` in storage order.
    pub fn filled(&self) -> impl Iterator<Item = ((usize, usize, usize), VoxelState)> + '_ {
        self.grid
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_filled())
            .map(|(i, &s)| (self.dims.coords(i), s))
    }

    /// Reflection `y -> ny - 1 - y`.
    pub fn mirrored_y(&self) -> Self {
        let mut m = Self::empty(self.dims);
        for ((x, y, z), s) in self.filled() {
            m.set(x, self.dims.ny - 1 - y, z, s);
        }
        m
    }

    /// Keeps only the largest face-connected component of filled voxels.
    /// Equal-size components are resolved in favour of the one containing the
    /// lexicographically smallest `(x, y, z)` voxel.
    pub fn largest_component(&self) -> Self {
        let d = self.dims;
        let mut label = vec![usize::MAX; self.grid.len()];
        let mut best: Option<(usize, usize)> = None; // (label, size)
        let mut next = 0;
        let mut queue = VecDeque::new();
        for x in 0..d.nx {
            for y in 0..d.ny {
                for z in 0..d.nz {
                    let seed = d.index(x, y, z);
                    if !self.grid[seed].is_filled() || label[seed] != usize::MAX {
                        continue;
                    }
                    label[seed] = next;
                    queue.push_back((x, y, z));
                    let mut size = 0;
                    while let Some((cx, cy, cz)) = queue.pop_front() {
                        size += 1;
                        for (nx, ny, nz) in face_neighbours(d, cx, cy, cz) {
                            let ni = d.index(nx, ny, nz);
                            if self.grid[ni].is_filled() && label[ni] == usize::MAX {
                                label[ni] = next;
                                queue.push_back((nx, ny, nz));
                            }
                        }
                    }
                    if best.is_none_or(|(_, s)| size > s) {
                        best = Some((next, size));
                    }
                    next += 1;
                }
            }
        }
        let grid = match best {
            None => self.grid.clone(),
            Some((keep, _)) => self
                .grid
                .iter()
                .zip(&label)
                .map(|(&s, &l)| if l == keep { s } else { VoxelState::Empty })
                .collect(),
        };
        Self { dims: d, grid, provenance: self.provenance.clone() }
    }

    pub fn is_connected(&self) -> bool {
        self.largest_component().voxel_count() == self.voxel_count()
    }

    /// Run-length string: each run is `<count><symbol>` with symbols `E`, `P`,
    /// `A`, in x-fastest order, e.g. `"5E2A441E"`.
    pub fn to_rle(&self) -> String {
        let mut out = String::new();
        let mut iter = self.grid.iter().peekable();
        while let Some(&s) = iter.next() {
            let mut run = 1;
            while iter.peek() == Some(&&s) {
                iter.next();
                run += 1;
            }
            let _ = write!(out, "{run}{}", s.symbol());
        }
        out
    }

    pub fn from_rle(dims: LatticeDims, rle: &str) -> Result<Self, MorphologyError> {
        dims.validate()?;
        let mut grid = Vec::with_capacity(dims.volume());
        let mut digits = String::new();
        for c in rle.chars() {
            if c.is_ascii_digit() {
                digits.push(c);
                continue;
            }
            let state = VoxelState::from_symbol(c)
                .ok_or_else(|| MorphologyError::Encoding(format!("unexpected character {c:?}")))?;
            if digits.is_empty() {
                return Err(MorphologyError::Encoding(format!("symbol {c:?} without a run length")));
            }
            let run: usize = digits
                .parse()
                .map_err(|_| MorphologyError::Encoding(format!("run length {digits:?} too large")))?;
            if run == 0 {
                return Err(MorphologyError::Encoding("zero-length run".into()));
            }
            if grid.len() + run > dims.volume() {
                return Err(MorphologyError::Encoding(format!("runs exceed {} cells", dims.volume())));
            }
            grid.extend(std::iter::repeat_n(state, run));
            digits.clear();
        }
        if !digits.is_empty() {
            return Err(MorphologyError::Encoding("trailing run length without symbol".into()));
        }
        if grid.len() != dims.volume() {
            return Err(MorphologyError::Encoding(format!(
                "runs cover {} of {} cells",
                grid.len(),
                dims.volume()
            )));
        }
        Ok(Self { dims, grid, provenance: Provenance::default() })
    }

    pub fn to_wire(&self) -> MorphologyJson {
        MorphologyJson { dims: [self.dims.nx, self.dims.ny, self.dims.nz], voxels: self.to_rle() }
    }

    pub fn from_wire(j: &MorphologyJson) -> Result<Self, MorphologyError> {
        let [nx, ny, nz] = j.dims;
        Self::from_rle(LatticeDims::new(nx, ny, nz)?, &j.voxels)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_wire()).expect("morphology serialization is infallible")
    }

    pub fn from_json(s: &str) -> Result<Self, MorphologyError> {
        let j: MorphologyJson = serde_json::from_str(s).map_err(|e| MorphologyError::Encoding(e.to_string()))?;
        Self::from_wire(&j)
    }
}

fn face_neighbours(d: LatticeDims, x: usize, y: usize, z: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    const STEPS: [(isize, isize, isize); 6] = [(-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, -1), (0, 0, 1)];
    STEPS.into_iter().filter_map(move |(dx, dy, dz)| {
        let nx = x.checked_add_signed(dx)?;
        let ny = y.checked_add_signed(dy)?;
        let nz = z.checked_add_signed(dz)?;
        d.contains(nx, ny, nz).then_some((nx, ny, nz))
    })
}

/// Builds a morphology by querying `(presence, material)` at every normalized
/// lattice point: empty iff presence <= 0, otherwise active iff material > 0.
/// The result is reduced to its largest connected component.
pub fn decode<F>(mut query: F, dims: LatticeDims) -> Morphology
where
    F: FnMut(f64, f64, f64) -> (f64, f64),
{
    let mut m = Morphology::empty(dims);
    let xs: Vec<f64> = (0..dims.nx).map(|i| normalize_coord(i, dims.nx).unwrap()).collect();
    let ys: Vec<f64> = (0..dims.ny).map(|i| normalize_coord(i, dims.ny).unwrap()).collect();
    let zs: Vec<f64> = (0..dims.nz).map(|i| normalize_coord(i, dims.nz).unwrap()).collect();
    for z in 0..dims.nz {
        for y in 0..dims.ny {
            for x in 0..dims.nx {
                let (pv, mat) = query(xs[x], ys[y], zs[z]);
                let s = if !(pv > 0.0) {
                    VoxelState::Empty
                } else if mat > 0.0 {
                    VoxelState::Active
                } else {
                    VoxelState::Passive
                };
                m.set(x, y, z, s);
            }
        }
    }
    m.largest_component()
}
