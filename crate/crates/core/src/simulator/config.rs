use serde::{Deserialize, Serialize};

use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisplacementMode {
    #[default]
    Spatial,
    /// Ground-plane distance only.
    Planar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Metres.
    pub voxel_edge: f64,
    /// Kilograms per voxel, shared equally among its eight corners.
    pub voxel_mass: f64,
    /// N/m, edge springs.
    pub structural_stiffness: f64,
    /// N/m, face-diagonal springs.
    pub shear_stiffness: f64,
    pub damping_ratio: f64,
    /// m/s², acting along -z.
    pub gravity: f64,
    pub ground_stiffness: f64,
    pub ground_contact: bool,
    pub friction_coefficient: f64,
    /// Fraction of rest length.
    pub actuation_amplitude: f64,
    /// Hz.
    pub actuation_frequency: f64,
    pub actuation_enabled: bool,
    /// Seconds.
    pub settle_duration: f64,
    pub run_duration: f64,
    pub timestep: f64,
    pub displacement_mode: DisplacementMode,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            voxel_edge: 0.01,
            voxel_mass: 0.001,
            structural_stiffness: 1000.0,
            shear_stiffness: 500.0,
            damping_ratio: 0.3,
            gravity: 9.81,
            ground_stiffness: 5000.0,
            ground_contact: true,
            friction_coefficient: 0.8,
            actuation_amplitude: 0.2,
            actuation_frequency: 2.0,
            actuation_enabled: true,
            settle_duration: 1.0,
            run_duration: 10.0,
            timestep: 1e-4,
            displacement_mode: DisplacementMode::Spatial,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("voxel_edge", self.voxel_edge),
            ("voxel_mass", self.voxel_mass),
            ("structural_stiffness", self.structural_stiffness),
            ("shear_stiffness", self.shear_stiffness),
            ("damping_ratio", self.damping_ratio),
            ("ground_stiffness", self.ground_stiffness),
            ("friction_coefficient", self.friction_coefficient),
            ("actuation_frequency", self.actuation_frequency),
            ("timestep", self.timestep),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(SimError::Config(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        for (name, v) in [("gravity", self.gravity), ("settle_duration", self.settle_duration), ("run_duration", self.run_duration)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SimError::Config(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(self.actuation_amplitude > 0.0 && self.actuation_amplitude < 1.0) {
            return Err(SimError::Config(format!("actuation_amplitude must lie in (0, 1), got {}", self.actuation_amplitude)));
        }
        let limit = self.stable_timestep_limit();
        if !(self.timestep < limit) {
            return Err(SimError::Config(format!("timestep {} exceeds stability limit {limit:.3e}", self.timestep)));
        }
        Ok(())
    }

    /// `(1/π)·sqrt(m/k)` for the lightest node share and the stiffest spring.
    pub fn stable_timestep_limit(&self) -> f64 {
        let m = self.voxel_mass / 8.0;
        let k = self.structural_stiffness.max(self.shear_stiffness);
        (m / k).sqrt() / std::f64::consts::PI
    }

    pub fn settle_steps(&self) -> u64 {
        (self.settle_duration / self.timestep).round() as u64
    }

    pub fn run_steps(&self) -> u64 {
        (self.run_duration / self.timestep).round() as u64
    }
}
