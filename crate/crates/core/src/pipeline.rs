//! Glue from genomes to scored morphologies: the per-algorithm decoder, seed
//! streams, and a cached [`GenomeEvaluator`] backed by any [`Evaluator`].

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::evolution::{
    evolve_afpo, evolve_neat, EvolutionConfig, EvolutionError, GenomeEvaluator, Optimizer, RunObserver, RunOutcome,
};
use crate::fitness::FitnessConfig;
use crate::genome::{
    CompiledCppn, CppnGenome, NeatParams, HYPERNEAT_INPUTS, HYPERNEAT_OUTPUTS, NEAT_INPUTS, NEAT_OUTPUTS,
};
use crate::hyperneat::{paint, PaintingConfig, SubstrateError, SubstrateLayout};
use crate::morphology::{decode, LatticeDims, Morphology};
use crate::protocol::{EvalError, EvaluationRequest, Evaluator, ResponseStatus};
use crate::simulator::{splitmix64, ControllerScenario, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Neat,
    Hyperneat,
    Afpo,
}

impl Algorithm {
    pub fn optimizer(self) -> Optimizer {
        match self {
            Self::Neat | Self::Hyperneat => Optimizer::Neat,
            Self::Afpo => Optimizer::Afpo,
        }
    }

    /// CPPN (inputs, outputs) evolved by this algorithm.
    pub fn genome_shape(self) -> (usize, usize) {
        match self {
            Self::Hyperneat => (HYPERNEAT_INPUTS, HYPERNEAT_OUTPUTS),
            Self::Neat | Self::Afpo => (NEAT_INPUTS, NEAT_OUTPUTS),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Neat => "neat",
            Self::Hyperneat => "hyperneat",
            Self::Afpo => "afpo",
        }
    }
}

/// How a genome turns into a lattice query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decoder {
    /// The CPPN maps `(x, y, z)` to `(presence, material)` directly.
    Direct,
    /// The CPPN paints a substrate, which is then queried.
    Substrate { layout: SubstrateLayout, painting: PaintingConfig },
}

impl Decoder {
    pub fn for_algorithm(algorithm: Algorithm, layout: &SubstrateLayout, painting: &PaintingConfig) -> Self {
        match algorithm {
            Algorithm::Hyperneat => Self::Substrate { layout: layout.clone(), painting: painting.clone() },
            Algorithm::Neat | Algorithm::Afpo => Self::Direct,
        }
    }

    pub fn decode(&self, genome: &CppnGenome, dims: LatticeDims) -> Result<Morphology, SubstrateError> {
        match self {
            Self::Direct => {
                let net = CompiledCppn::compile(genome)?;
                if (net.input_count(), net.output_count()) != (NEAT_INPUTS, NEAT_OUTPUTS) {
                    return Err(crate::genome::GenomeError::ModeMismatch {
                        a: genome.mode(),
                        b: (NEAT_INPUTS, NEAT_OUTPUTS),
                    }
                    .into());
                }
                let mut scratch = Vec::new();
                let mut out = [0.0; NEAT_OUTPUTS];
                Ok(decode(
                    |x, y, z| {
                        net.activate_into(&[x, y, z], &mut scratch, &mut out).expect("shape checked");
                        (out[0], out[1])
                    },
                    dims,
                ))
            }
            Self::Substrate { layout, painting } => {
                let net = paint(genome, layout, painting)?;
                Ok(decode(|x, y, z| net.query(x, y, z), dims))
            }
        }
    }
}

/// Independent stream seed derived from a master seed and a purpose tag.
pub fn derive_seed(master: u64, stream: &str) -> u64 {
    stream.bytes().fold(splitmix64(master), |h, b| splitmix64(h ^ u64::from(b)))
}

pub const EVOLUTION_STREAM: &str = "evolution";
pub const TRAINING_STREAM: &str = "training-scenario";

/// Scores genomes by decoding them and evaluating the morphology under one
/// fixed scenario. Results are cached by morphology encoding; bodies with
/// fewer than two voxels score 0 without simulation.
pub struct MorphologyFitness<'a> {
    decoder: Decoder,
    dims: LatticeDims,
    scenario: ControllerScenario,
    sim: SimConfig,
    fitness: FitnessConfig,
    evaluator: &'a dyn Evaluator,
    cache: HashMap<String, f64>,
    batches: u64,
    simulated: usize,
}

impl<'a> MorphologyFitness<'a> {
    pub fn new(
        decoder: Decoder,
        dims: LatticeDims,
        scenario: ControllerScenario,
        sim: SimConfig,
        fitness: FitnessConfig,
        evaluator: &'a dyn Evaluator,
    ) -> Self {
        Self {
            decoder,
            dims,
            scenario,
            sim,
            fitness,
            evaluator,
            cache: HashMap::new(),
            batches: 0,
            simulated: 0,
        }
    }

    /// Number of morphologies actually sent for simulation so far.
    pub fn simulated(&self) -> usize {
        self.simulated
    }

    pub fn decode(&self, genome: &CppnGenome) -> Result<Morphology, SubstrateError> {
        self.decoder.decode(genome, self.dims)
    }
}

impl GenomeEvaluator for MorphologyFitness<'_> {
    fn evaluate(&mut self, genomes: &[CppnGenome]) -> Result<Vec<f64>, EvalError> {
        let batch = self.batches;
        self.batches += 1;
        let keys: Vec<Option<String>> = genomes
            .iter()
            .map(|g| match self.decoder.decode(g, self.dims) {
                Ok(m) if m.voxel_count() >= 2 => Some(m.to_rle()),
                Ok(_) => None,
                Err(e) => {
                    log::warn!("genome failed to decode: {e}");
                    None
                }
            })
            .collect();

        let mut requests: Vec<EvaluationRequest> = Vec::new();
        for key in keys.iter().flatten() {
            if self.cache.contains_key(key) || requests.iter().any(|r| &r.morphology.voxels == key) {
                continue;
            }
            requests.push(EvaluationRequest {
                request_id: format!("b{batch}-{}", requests.len()),
                morphology: Morphology::from_rle(self.dims, key).expect("own encoding").to_wire(),
                scenario: self.scenario,
                sim_config: self.sim.clone(),
                fitness_config: self.fitness.clone(),
            });
        }
        let mut fresh: HashMap<&str, f64> = HashMap::new();
        if !requests.is_empty() {
            let responses = self.evaluator.evaluate(&requests)?;
            self.simulated += requests.len();
            for (req, resp) in requests.iter().zip(&responses) {
                if resp.status == ResponseStatus::Error {
                    // Not cached, so a later generation may retry it.
                    fresh.insert(&req.morphology.voxels, 0.0);
                } else {
                    self.cache.insert(req.morphology.voxels.clone(), resp.fitness);
                }
            }
        }
        Ok(keys
            .iter()
            .map(|k| match k {
                None => 0.0,
                Some(k) => self.cache.get(k).or_else(|| fresh.get(k.as_str())).copied().unwrap_or(0.0),
            })
            .collect())
    }
}

/// Everything needed to evolve morphologies for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub params: NeatParams,
    pub layout: SubstrateLayout,
    pub painting: PaintingConfig,
    pub dims: LatticeDims,
    pub sim: SimConfig,
    pub fitness: FitnessConfig,
    pub checkpoint_interval: usize,
}

impl ExperimentSpec {
    pub fn evolution_config(&self) -> EvolutionConfig {
        let (input_count, output_count) = self.algorithm.genome_shape();
        EvolutionConfig {
            params: self.params.clone(),
            seed: derive_seed(self.seed, EVOLUTION_STREAM),
            input_count,
            output_count,
            checkpoint_interval: self.checkpoint_interval,
        }
    }

    pub fn training_scenario(&self) -> ControllerScenario {
        ControllerScenario { master_seed: derive_seed(self.seed, TRAINING_STREAM), scenario_id: 0 }
    }

    pub fn decoder(&self) -> Decoder {
        Decoder::for_algorithm(self.algorithm, &self.layout, &self.painting)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub run: RunOutcome,
    pub best_morphology: Morphology,
    pub simulated: usize,
}

/// Runs the configured algorithm end to end.
pub fn run_experiment(
    spec: &ExperimentSpec,
    evaluator: &dyn Evaluator,
    observer: &mut dyn RunObserver,
) -> Result<ExperimentOutcome, EvolutionError> {
    let mut scorer = MorphologyFitness::new(
        spec.decoder(),
        spec.dims,
        spec.training_scenario(),
        spec.sim.clone(),
        spec.fitness.clone(),
        evaluator,
    );
    let cfg = spec.evolution_config();
    let run = match spec.algorithm.optimizer() {
        Optimizer::Neat => evolve_neat(&cfg, &mut scorer, observer)?,
        Optimizer::Afpo => evolve_afpo(&cfg, &mut scorer, observer)?,
    };
    let best_morphology = scorer
        .decode(&run.best.genome)
        .map_err(|e| EvolutionError::Config(format!("best genome does not decode: {e}")))?;
    Ok(ExperimentOutcome { run, best_morphology, simulated: scorer.simulated() })
}
