//! Activation functions available to CPPN nodes and substrate neurons.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Tag of a node's transfer function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sine,
    NegSine,
    Abs,
    NegAbs,
    Square,
    NegSquare,
    SqrtAbs,
    NegSqrtAbs,
    Sigmoid,
    Relu,
}

impl Activation {
    /// Functions a CPPN node may carry. `Relu` is reserved for the substrate.
    pub const CPPN_SET: [Activation; 9] = [
        Activation::Sine,
        Activation::NegSine,
        Activation::Abs,
        Activation::NegAbs,
        Activation::Square,
        Activation::NegSquare,
        Activation::SqrtAbs,
        Activation::NegSqrtAbs,
        Activation::Sigmoid,
    ];

    /// Evaluates the function. Finite input always yields finite output.
    #[inline]
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Sine => v.sin(),
            Activation::NegSine => -v.sin(),
            Activation::Abs => v.abs(),
            Activation::NegAbs => -v.abs(),
            Activation::Square => (v * v).min(f64::MAX),
            Activation::NegSquare => -(v * v).min(f64::MAX),
            Activation::SqrtAbs => v.abs().sqrt(),
            Activation::NegSqrtAbs => -v.abs().sqrt(),
            Activation::Sigmoid => 1.0 / (1.0 + (-v).exp()),
            Activation::Relu => v.max(0.0),
        }
    }

    /// Uniform draw from [`Activation::CPPN_SET`].
    pub fn random_cppn<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::CPPN_SET[rng.random_range(0..Self::CPPN_SET.len())]
    }
}
