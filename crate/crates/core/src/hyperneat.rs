//! Substrate networks whose weights are painted by a CPPN.
//!
//! Neuron `j` of layer `k` sits at `(u, v)` with `u = normalize(k, layers)` and
//! `v = normalize(j, layer_size)`. The CPPN is asked for the weight of every
//! source/target pair between adjacent layers with inputs `(u1, v1, u2, v2, 1)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activation::Activation;
use crate::genome::{CompiledCppn, CppnGenome, GenomeError, HYPERNEAT_INPUTS, HYPERNEAT_OUTPUTS};
use crate::morphology::normalize_coord;

pub const SUBSTRATE_INPUTS: usize = 3;
pub const SUBSTRATE_OUTPUTS: usize = 2;
const HIDDEN_BOUNDS: std::ops::RangeInclusive<usize> = 1..=7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SubstrateError {
    #[error("invalid substrate layout: {0}")]
    Layout(String),
    #[error("invalid painting config: {0}")]
    Painting(String),
    #[error(transparent)]
    Genome(#[from] GenomeError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubstrateLayout {
    /// Sizes of the hidden layers between the 3 inputs and 2 outputs.
    pub hidden_layers: Vec<usize>,
    pub activation: Activation,
}

impl Default for SubstrateLayout {
    fn default() -> Self {
        Self { hidden_layers: vec![5, 5], activation: Activation::Relu }
    }
}

impl SubstrateLayout {
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut s = Vec::with_capacity(self.hidden_layers.len() + 2);
        s.push(SUBSTRATE_INPUTS);
        s.extend_from_slice(&self.hidden_layers);
        s.push(SUBSTRATE_OUTPUTS);
        s
    }

    pub fn validate(&self) -> Result<(), SubstrateError> {
        if !HIDDEN_BOUNDS.contains(&self.hidden_layers.len()) {
            return Err(SubstrateError::Layout(format!(
                "hidden layer count {} outside [1, 7]",
                self.hidden_layers.len()
            )));
        }
        if let Some(bad) = self.hidden_layers.iter().find(|s| !HIDDEN_BOUNDS.contains(s)) {
            return Err(SubstrateError::Layout(format!("hidden layer size {bad} outside [1, 7]")));
        }
        Ok(())
    }

    /// `(u, v)` coordinates of every neuron, per layer.
    pub fn positions(&self) -> Vec<Vec<(f64, f64)>> {
        let sizes = self.layer_sizes();
        let layers = sizes.len();
        sizes
            .iter()
            .enumerate()
            .map(|(k, &n)| {
                let u = normalize_coord(k, layers).expect("layer index in range");
                (0..n).map(|j| (u, normalize_coord(j, n).expect("neuron index in range"))).collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PaintingConfig {
    pub weight_threshold: f64,
    pub weight_range: f64,
}

impl Default for PaintingConfig {
    fn default() -> Self {
        Self { weight_threshold: 0.2, weight_range: 3.0 }
    }
}

impl PaintingConfig {
    pub fn validate(&self) -> Result<(), SubstrateError> {
        if !(0.0 <= self.weight_threshold && self.weight_threshold < self.weight_range)
            || !self.weight_range.is_finite()
            || self.weight_threshold >= 1.0
        {
            return Err(SubstrateError::Painting(format!(
                "need 0 <= threshold < min(1, range), got threshold {} range {}",
                self.weight_threshold, self.weight_range
            )));
        }
        Ok(())
    }

    /// Maps a raw CPPN output onto an expressed weight.
    pub fn express(&self, raw: f64) -> f64 {
        let mag = raw.abs();
        if !(mag > self.weight_threshold) {
            return 0.0;
        }
        let scaled = (mag - self.weight_threshold) / (1.0 - self.weight_threshold) * self.weight_range;
        scaled.min(self.weight_range).copysign(raw)
    }
}

/// Dense feed-forward network produced by painting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhenotypeNetwork {
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    /// `weights[k][target][source]` connects layer `k` to layer `k + 1`.
    pub weights: Vec<Vec<Vec<f64>>>,
}

/// Paints a substrate from a HyperNEAT-mode CPPN.
pub fn paint(cppn: &CppnGenome, layout: &SubstrateLayout, cfg: &PaintingConfig) -> Result<PhenotypeNetwork, SubstrateError> {
    if cppn.mode() != (HYPERNEAT_INPUTS, HYPERNEAT_OUTPUTS) {
        return Err(GenomeError::ModeMismatch { a: cppn.mode(), b: (HYPERNEAT_INPUTS, HYPERNEAT_OUTPUTS) }.into());
    }
    layout.validate()?;
    cfg.validate()?;
    let net = CompiledCppn::compile(cppn)?;
    let pos = layout.positions();
    let mut scratch = Vec::new();
    let mut out = [0.0];
    let mut weights = Vec::with_capacity(pos.len() - 1);
    for k in 0..pos.len() - 1 {
        let mut m = Vec::with_capacity(pos[k + 1].len());
        for &(u2, v2) in &pos[k + 1] {
            let mut row = Vec::with_capacity(pos[k].len());
            for &(u1, v1) in &pos[k] {
                net.activate_into(&[u1, v1, u2, v2, 1.0], &mut scratch, &mut out)?;
                row.push(cfg.express(out[0]));
            }
            m.push(row);
        }
        weights.push(m);
    }
    Ok(PhenotypeNetwork { layer_sizes: layout.layer_sizes(), activation: layout.activation, weights })
}

impl PhenotypeNetwork {
    /// Forward pass for one lattice point; returns `(presence, material)`
    /// before any thresholding.
    pub fn query(&self, x: f64, y: f64, z: f64) -> (f64, f64) {
        let mut a: Vec<f64> = vec![x, y, z];
        let mut b: Vec<f64> = Vec::new();
        for m in &self.weights {
            b.clear();
            b.extend(m.iter().map(|row| {
                let s: f64 = row.iter().zip(&a).map(|(w, v)| w * v).sum();
                self.activation.apply(s)
            }));
            std::mem::swap(&mut a, &mut b);
        }
        (a[0], a[1])
    }

    /// Product over layers of the largest absolute row sum: a Lipschitz
    /// constant of `query` in the infinity norm.
    pub fn lipschitz_bound(&self) -> f64 {
        self.weights
            .iter()
            .map(|m| m.iter().map(|r| r.iter().map(|w| w.abs()).sum::<f64>()).fold(0.0, f64::max))
            .product()
    }
}
