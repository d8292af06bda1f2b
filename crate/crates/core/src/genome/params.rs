use serde::{Deserialize, Serialize};

/// NEAT hyper-parameters. Defaults reproduce the published CPPN settings; the
/// three weight-mutation knobs use conventional NEAT values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeatParams {
    pub compatibility_threshold: f64,
    pub disjoint_coefficient: f64,
    pub weight_coefficient: f64,
    pub max_stagnation: u32,
    pub survival_threshold: f64,
    pub activation_mutate_rate: f64,
    pub add_connection_rate: f64,
    pub delete_connection_rate: f64,
    pub toggle_connection_rate: f64,
    pub add_node_rate: f64,
    pub delete_node_rate: f64,
    pub weight_mutate_rate: f64,
    pub weight_perturb_sigma: f64,
    pub weight_replace_rate: f64,
    pub population_size: usize,
    pub generations: usize,
}

impl Default for NeatParams {
    fn default() -> Self {
        Self {
            compatibility_threshold: 3.0,
            disjoint_coefficient: 1.0,
            weight_coefficient: 0.5,
            max_stagnation: 15,
            survival_threshold: 0.3,
            activation_mutate_rate: 0.4,
            add_connection_rate: 0.3,
            delete_connection_rate: 0.2,
            toggle_connection_rate: 0.5,
            add_node_rate: 0.3,
            delete_node_rate: 0.2,
            weight_mutate_rate: 0.8,
            weight_perturb_sigma: 0.5,
            weight_replace_rate: 0.1,
            population_size: 50,
            generations: 1000,
        }
    }
}

impl NeatParams {
    /// All mutation rates set to zero.
    pub fn frozen() -> Self {
        Self {
            activation_mutate_rate: 0.0,
            add_connection_rate: 0.0,
            delete_connection_rate: 0.0,
            toggle_connection_rate: 0.0,
            add_node_rate: 0.0,
            delete_node_rate: 0.0,
            weight_mutate_rate: 0.0,
            weight_replace_rate: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let rates = [
            ("survival_threshold", self.survival_threshold),
            ("activation_mutate_rate", self.activation_mutate_rate),
            ("add_connection_rate", self.add_connection_rate),
            ("delete_connection_rate", self.delete_connection_rate),
            ("toggle_connection_rate", self.toggle_connection_rate),
            ("add_node_rate", self.add_node_rate),
            ("delete_node_rate", self.delete_node_rate),
            ("weight_mutate_rate", self.weight_mutate_rate),
            ("weight_replace_rate", self.weight_replace_rate),
        ];
        for (name, r) in rates {
            if !(0.0..=1.0).contains(&r) {
                return Err(format!("{name} must lie in [0, 1], got {r}"));
            }
        }
        if !(self.compatibility_threshold > 0.0) {
            return Err("compatibility_threshold must be > 0".into());
        }
        if !(self.weight_perturb_sigma >= 0.0) || !self.weight_perturb_sigma.is_finite() {
            return Err("weight_perturb_sigma must be finite and >= 0".into());
        }
        if self.disjoint_coefficient < 0.0 || self.weight_coefficient < 0.0 {
            return Err("compatibility coefficients must be >= 0".into());
        }
        if self.population_size < 2 {
            return Err("population_size must be >= 2".into());
        }
        Ok(())
    }
}
