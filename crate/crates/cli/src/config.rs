//! Run configuration files.

use std::path::{Path, PathBuf};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use voxevo_core::pipeline::{Algorithm, ExperimentSpec};
use voxevo_core::{FitnessConfig, LatticeDims, NeatParams, PaintingConfig, SimConfig, SubstrateLayout};
use voxevo_service::ServerPool;

use crate::CliError;

pub const DEFAULT_CHECKPOINT_INTERVAL: usize = 50;

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

fn default_checkpoint_interval() -> usize {
    DEFAULT_CHECKPOINT_INTERVAL
}

/// Where evaluations run.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum EvaluatorSetting {
    /// In-process, written as the string `"local"`.
    #[default]
    Local,
    Remote(ServerPool),
}

impl Serialize for EvaluatorSetting {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            EvaluatorSetting::Local => s.serialize_str("local"),
            EvaluatorSetting::Remote(pool) => pool.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for EvaluatorSetting {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(s) if s == "local" => Ok(EvaluatorSetting::Local),
            serde_json::Value::String(s) => Err(D::Error::custom(format!("unknown evaluator \"{s}\", expected \"local\" or a server pool"))),
            v => ServerPool::deserialize(v).map(EvaluatorSetting::Remote).map_err(D::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub seed: u64,
    #[serde(default)]
    pub neat: NeatParams,
    /// HyperNEAT only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub substrate: Option<SubstrateLayout>,
    /// HyperNEAT only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub painting: Option<PaintingConfig>,
    #[serde(default)]
    pub lattice: LatticeDims,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub fitness: FitnessConfig,
    #[serde(default)]
    pub evaluator: EvaluatorSetting,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Generations between checkpoints; 0 disables periodic checkpoints.
    #[serde(default = "default_checkpoint_interval")]
    pub checkpoint_interval: usize,
}

/// A semantic problem, keyed by the JSON field it concerns.
struct Invalid {
    key: &'static str,
    message: String,
}

fn invalid(key: &'static str, message: impl ToString) -> Invalid {
    Invalid { key, message: message.to_string() }
}

impl RunConfig {
    fn check(&self) -> Result<(), Invalid> {
        self.neat.validate().map_err(|m| invalid("neat", m))?;
        if self.neat.population_size < 2 {
            return Err(invalid("population_size", "population_size must be at least 2"));
        }
        self.lattice.validate().map_err(|e| invalid("lattice", e))?;
        self.sim.validate().map_err(|e| invalid("sim", e))?;
        self.fitness.validate().map_err(|e| invalid("fitness", e))?;
        if self.fitness.upsilon_max != self.lattice.volume() {
            return Err(invalid(
                "upsilon_max",
                format!(
                    "upsilon_max is {} but the {}x{}x{} lattice holds {}",
                    self.fitness.upsilon_max,
                    self.lattice.nx,
                    self.lattice.ny,
                    self.lattice.nz,
                    self.lattice.volume()
                ),
            ));
        }
        if self.algorithm != Algorithm::Hyperneat {
            if self.substrate.is_some() {
                return Err(invalid("substrate", "substrate is only used by hyperneat"));
            }
            if self.painting.is_some() {
                return Err(invalid("painting", "painting is only used by hyperneat"));
            }
        }
        self.substrate_layout().validate().map_err(|e| invalid("substrate", e))?;
        self.painting_config().validate().map_err(|e| invalid("painting", e))?;
        if let EvaluatorSetting::Remote(pool) = &self.evaluator {
            pool.validate().map_err(|e| invalid("evaluator", e))?;
        }
        Ok(())
    }

    pub fn substrate_layout(&self) -> SubstrateLayout {
        self.substrate.clone().unwrap_or_default()
    }

    pub fn painting_config(&self) -> PaintingConfig {
        self.painting.clone().unwrap_or_default()
    }

    pub fn experiment(&self) -> ExperimentSpec {
        ExperimentSpec {
            algorithm: self.algorithm,
            seed: self.seed,
            params: self.neat.clone(),
            layout: self.substrate_layout(),
            painting: self.painting_config(),
            dims: self.lattice,
            sim: self.sim.clone(),
            fitness: self.fitness.clone(),
            checkpoint_interval: self.checkpoint_interval,
        }
    }

    /// Parses and validates `text`; errors name `origin`, a line and a column.
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
            CliError::Config(format!("{origin}:{}:{}: {}", e.line(), e.column(), strip_position(&e.to_string())))
        })?;
        cfg.check().map_err(|Invalid { key, message }| {
            let line = line_of_key(text, key);
            CliError::Config(format!("{origin}:{line}: {message}"))
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: cannot read config: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

fn strip_position(msg: &str) -> &str {
    msg.rfind(" at line ").map_or(msg, |i| &msg[..i])
}

/// 1-based line of the first `"key"`, or 1.
fn line_of_key(text: &str, key: &str) -> usize {
    let quoted = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&quoted)).map_or(1, |i| i + 1)
}
