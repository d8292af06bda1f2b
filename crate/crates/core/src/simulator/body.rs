use std::collections::BTreeMap;
use std::f64::consts::TAU;

use super::SimConfig;
use crate::morphology::{Morphology, VoxelState};

const MAX_SPEED_SQ: f64 = 1e6;

/// Neighbour offsets in the order their forces are summed. The first eight
/// have no y component; the rest come in `(+y, -y)` pairs that are added
/// together before joining the total, so a y-mirrored body sees bitwise
/// mirrored forces.
const SLOTS: [[i32; 3]; 18] = [
    [1, 0, 0],
    [-1, 0, 0],
    [0, 0, 1],
    [0, 0, -1],
    [1, 0, 1],
    [1, 0, -1],
    [-1, 0, 1],
    [-1, 0, -1],
    [0, 1, 0],
    [0, -1, 0],
    [1, 1, 0],
    [1, -1, 0],
    [-1, 1, 0],
    [-1, -1, 0],
    [0, 1, 1],
    [0, -1, 1],
    [0, 1, -1],
    [0, -1, -1],
];
const SINGLE_SLOTS: usize = 8;

#[derive(Debug, Clone)]
struct Spring {
    a: u32,
    b: u32,
    rest: f64,
    stiffness: f64,
    damping: f64,
    /// Range into `SoftBody::spring_voxels`.
    act_start: u32,
    act_len: u32,
    /// Amplitude divided by `act_len`.
    act_scale: f64,
}

/// A built mass-spring system, ready to be stepped.
#[derive(Debug, Clone)]
pub struct SoftBody {
    pos: Vec<[f64; 3]>,
    vel: Vec<[f64; 3]>,
    mass: Vec<f64>,
    inv_mass: Vec<f64>,
    ground_damping: Vec<f64>,
    /// Per node, indices into `forces` following `SLOTS`; 0 is a zero row.
    slots: Vec<[u32; 18]>,
    springs: Vec<Spring>,
    structural_count: usize,
    /// Active-voxel indices per spring, sorted by phase.
    spring_voxels: Vec<u32>,
    phases: Vec<f64>,
    voxel_signal: Vec<f64>,
    /// Row 0 is zero, rows `1..=S` the force on each spring's `a` end and rows
    /// `S+1..=2S` its negation.
    forces: Vec<[f64; 3]>,
    steps: u64,
    cfg: SimConfig,
}

impl SoftBody {
    /// Builds the lattice for every filled voxel of `m`, placed with its
    /// bounding box centred on the origin in x and y and resting on `z = 0`.
    pub fn new<F>(m: &Morphology, cfg: &SimConfig, phase_of: F) -> Self
    where
        F: Fn(usize, usize, usize) -> f64,
    {
        let d = m.dims();
        let (cx, cy, cz) = (d.nx + 1, d.ny + 1, d.nz + 1);
        let corner_index = |x: usize, y: usize, z: usize| x + cx * (y + cy * z);
        let mut node_of = vec![u32::MAX; cx * cy * cz];
        let mut corners: Vec<[usize; 3]> = Vec::new();
        let mut shares: Vec<u32> = Vec::new();

        // Active voxels, identified by their position in `phases`.
        let mut phases = Vec::new();
        let mut edges: BTreeMap<(u32, u32), (bool, Vec<u32>)> = BTreeMap::new();

        for ((x, y, z), state) in m.filled() {
            let mut ids = [0u32; 8];
            for (c, id) in ids.iter_mut().enumerate() {
                let p = [x + (c & 1), y + ((c >> 1) & 1), z + (c >> 2)];
                let ci = corner_index(p[0], p[1], p[2]);
                if node_of[ci] == u32::MAX {
                    node_of[ci] = corners.len() as u32;
                    corners.push(p);
                    shares.push(0);
                }
                *id = node_of[ci];
                shares[*id as usize] += 1;
            }
            let active = (state == VoxelState::Active).then(|| {
                phases.push(phase_of(x, y, z));
                (phases.len() - 1) as u32
            });
            for i in 0..8usize {
                for j in i + 1..8 {
                    let differing = (i ^ j).count_ones();
                    if differing == 3 {
                        continue;
                    }
                    let (a, b) = (ids[i].min(ids[j]), ids[i].max(ids[j]));
                    let entry = edges.entry((a, b)).or_insert_with(|| (differing == 1, Vec::new()));
                    if let Some(v) = active {
                        entry.1.push(v);
                    }
                }
            }
        }

        let n = corners.len();
        let (mut lo, mut hi) = ([usize::MAX; 3], [0usize; 3]);
        for c in &corners {
            for k in 0..3 {
                lo[k] = lo[k].min(c[k]);
                hi[k] = hi[k].max(c[k]);
            }
        }
        // Twice the grid coordinate keeps the centring exact.
        let pos: Vec<[f64; 3]> = corners
            .iter()
            .map(|c| {
                let x = (2 * c[0]) as f64 - (lo[0] + hi[0]) as f64;
                let y = (2 * c[1]) as f64 - (lo[1] + hi[1]) as f64;
                let z = (2 * (c[2] - lo[2])) as f64;
                [x * 0.5 * cfg.voxel_edge, y * 0.5 * cfg.voxel_edge, z * 0.5 * cfg.voxel_edge]
            })
            .collect();
        let mass: Vec<f64> = shares.iter().map(|&s| s as f64 * cfg.voxel_mass / 8.0).collect();
        let inv_mass = mass.iter().map(|m| 1.0 / m).collect();
        let ground_damping = mass
            .iter()
            .map(|m| 2.0 * cfg.damping_ratio * (cfg.ground_stiffness * m).sqrt())
            .collect();

        let mut springs = Vec::with_capacity(edges.len());
        let mut spring_voxels = Vec::new();
        let mut structural_count = 0;
        let mut spring_of: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        for (&(a, b), (structural, voxels)) in &edges {
            let stiffness = if *structural {
                structural_count += 1;
                cfg.structural_stiffness
            } else {
                cfg.shear_stiffness
            };
            // Rest lengths come from the built geometry so the initial state is
            // exactly force-free.
            let (pa, pb) = (pos[a as usize], pos[b as usize]);
            let rest = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2) + (pb[2] - pa[2]).powi(2)).sqrt();
            let (ma, mb) = (mass[a as usize], mass[b as usize]);
            let reduced = ma * mb / (ma + mb);
            let mut vs = voxels.clone();
            vs.sort_by(|&p, &q| phases[p as usize].total_cmp(&phases[q as usize]).then(p.cmp(&q)));
            spring_of.insert((a, b), springs.len() as u32);
            springs.push(Spring {
                a,
                b,
                rest,
                stiffness,
                damping: 2.0 * cfg.damping_ratio * (stiffness * reduced).sqrt(),
                act_start: spring_voxels.len() as u32,
                act_len: vs.len() as u32,
                act_scale: if vs.is_empty() { 0.0 } else { cfg.actuation_amplitude / vs.len() as f64 },
            });
            spring_voxels.extend(vs);
        }

        let total = springs.len() as u32;
        let slots = corners
            .iter()
            .enumerate()
            .map(|(me, c)| {
                let me = me as u32;
                let mut row = [0u32; 18];
                for (slot, off) in row.iter_mut().zip(SLOTS.iter()) {
                    let nb: Option<[usize; 3]> = (0..3)
                        .map(|k| c[k].checked_add_signed(off[k] as isize))
                        .collect::<Option<Vec<_>>>()
                        .map(|v| [v[0], v[1], v[2]]);
                    let Some(nb) = nb.filter(|p| p[0] < cx && p[1] < cy && p[2] < cz) else { continue };
                    let other = node_of[corner_index(nb[0], nb[1], nb[2])];
                    if other == u32::MAX {
                        continue;
                    }
                    if let Some(&s) = spring_of.get(&(me.min(other), me.max(other))) {
                        *slot = if springs[s as usize].a == me { 1 + s } else { 1 + total + s };
                    }
                }
                row
            })
            .collect();

        let active = phases.len();
        Self {
            pos,
            vel: vec![[0.0; 3]; n],
            mass,
            inv_mass,
            ground_damping,
            slots,
            forces: vec![[0.0; 3]; 1 + 2 * springs.len()],
            springs,
            structural_count,
            spring_voxels,
            phases,
            voxel_signal: vec![0.0; active],
            steps: 0,
            cfg: cfg.clone(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.pos.len()
    }

    pub fn structural_spring_count(&self) -> usize {
        self.structural_count
    }

    pub fn shear_spring_count(&self) -> usize {
        self.springs.len() - self.structural_count
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.pos
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn velocities_mut(&mut self) -> &mut [[f64; 3]] {
        &mut self.vel
    }

    /// Simulated time in seconds.
    pub fn time(&self) -> f64 {
        self.steps as f64 * self.cfg.timestep
    }

    pub fn translate(&mut self, by: [f64; 3]) {
        for p in &mut self.pos {
            for k in 0..3 {
                p[k] += by[k];
            }
        }
    }

    /// Mass-weighted mean node position.
    pub fn com(&self) -> [f64; 3] {
        let mut acc = [0.0; 3];
        let mut total = 0.0;
        for (p, &m) in self.pos.iter().zip(&self.mass) {
            for k in 0..3 {
                acc[k] += m * p[k];
            }
            total += m;
        }
        acc.map(|a| a / total)
    }

    pub fn momentum(&self) -> [f64; 3] {
        let mut acc = [0.0; 3];
        for (v, &m) in self.vel.iter().zip(&self.mass) {
            for k in 0..3 {
                acc[k] += m * v[k];
            }
        }
        acc
    }

    pub fn kinetic_energy(&self) -> f64 {
        self.vel
            .iter()
            .zip(&self.mass)
            .map(|(v, &m)| 0.5 * m * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]))
            .sum()
    }

    /// Takes `steps` integration steps. Returns false as soon as any state
    /// value is non-finite or a node exceeds the speed limit.
    pub fn advance(&mut self, steps: u64, actuate: bool) -> bool {
        for _ in 0..steps {
            if !self.step(actuate) {
                return false;
            }
        }
        true
    }

    /// One semi-implicit Euler step.
    pub fn step(&mut self, actuate: bool) -> bool {
        let actuate = actuate && !self.phases.is_empty();
        let cfg = &self.cfg;
        let dt = cfg.timestep;
        if actuate {
            let wt = TAU * cfg.actuation_frequency * self.time();
            for (s, &ph) in self.voxel_signal.iter_mut().zip(&self.phases) {
                *s = (wt + ph).sin();
            }
        }

        let total = self.springs.len();
        let (pos, vel) = (&self.pos, &self.vel);
        for (i, sp) in self.springs.iter().enumerate() {
            let (pa, pb) = (pos[sp.a as usize], pos[sp.b as usize]);
            let (va, vb) = (vel[sp.a as usize], vel[sp.b as usize]);
            let d = [pb[0] - pa[0], pb[1] - pa[1], pb[2] - pa[2]];
            let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            let mut rest = sp.rest;
            if actuate && sp.act_len > 0 {
                let range = sp.act_start as usize..(sp.act_start + sp.act_len) as usize;
                let mut sum = 0.0;
                for &v in &self.spring_voxels[range] {
                    sum += self.voxel_signal[v as usize];
                }
                rest *= 1.0 + sp.act_scale * sum;
            }
            let dv = [vb[0] - va[0], vb[1] - va[1], vb[2] - va[2]];
            let closing = dv[0] * d[0] + dv[1] * d[1] + dv[2] * d[2];
            let inv_len = 1.0 / len;
            let scale = (sp.stiffness * (len - rest) + sp.damping * closing * inv_len) * inv_len;
            let f = [scale * d[0], scale * d[1], scale * d[2]];
            self.forces[1 + i] = f;
            self.forces[1 + total + i] = [-f[0], -f[1], -f[2]];
        }

        let forces = &self.forces;
        let mut healthy = true;
        for n in 0..self.pos.len() {
            let row = &self.slots[n];
            let mut f = [0.0; 3];
            for &s in &row[..SINGLE_SLOTS] {
                let g = forces[s as usize];
                f[0] += g[0];
                f[1] += g[1];
                f[2] += g[2];
            }
            for pair in row[SINGLE_SLOTS..].chunks_exact(2) {
                let (g, h) = (forces[pair[0] as usize], forces[pair[1] as usize]);
                f[0] += g[0] + h[0];
                f[1] += g[1] + h[1];
                f[2] += g[2] + h[2];
            }
            let m = self.mass[n];
            let inv_m = self.inv_mass[n];
            f[2] -= m * cfg.gravity;
            let v = &mut self.vel[n];
            let p = &mut self.pos[n];
            if cfg.ground_contact && p[2] < 0.0 {
                let normal = -cfg.ground_stiffness * p[2] - self.ground_damping[n] * v[2];
                if normal > 0.0 {
                    f[2] += normal;
                    let tx = v[0] + f[0] * inv_m * dt;
                    let ty = v[1] + f[1] * inv_m * dt;
                    let speed = (tx * tx + ty * ty).sqrt();
                    if speed > 0.0 {
                        let cap = (cfg.friction_coefficient * normal).min(m * speed / dt);
                        f[0] -= cap * tx / speed;
                        f[1] -= cap * ty / speed;
                    }
                }
            }
            for k in 0..3 {
                v[k] += f[k] * inv_m * dt;
                p[k] += v[k] * dt;
            }
            let speed_sq = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            healthy &= speed_sq <= MAX_SPEED_SQ && (p[0] + p[1] + p[2]).is_finite();
        }
        self.steps += 1;
        healthy
    }
}
