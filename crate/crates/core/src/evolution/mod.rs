//! NEAT and AFPO generation loops over CPPN genomes.

mod afpo;
mod neat;
mod pareto;
mod species;

pub use afpo::evolve_afpo;
pub use neat::{evolve_neat, reproduce};
pub use pareto::pareto_front;
pub use species::{speciate, Species};

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::genome::{CppnGenome, InnovationRegistry, NeatParams};
use crate::protocol::EvalError;

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error("invalid evolution config: {0}")]
    Config(String),
    #[error("evaluation failed in generation {generation}: {source}")]
    Evaluation { generation: usize, source: EvalError },
    #[error("evaluator returned {got} fitness values for {expected} genomes")]
    EvaluatorContract { expected: usize, got: usize },
    #[error("checkpoint failed: {0}")]
    Checkpoint(String),
}

/// Scores a batch of genomes; results are in input order.
pub trait GenomeEvaluator {
    fn evaluate(&mut self, genomes: &[CppnGenome]) -> Result<Vec<f64>, EvalError>;
}

/// Adapts a per-genome closure.
pub struct FnEvaluator<F>(pub F);

impl<F: FnMut(&CppnGenome) -> f64> GenomeEvaluator for FnEvaluator<F> {
    fn evaluate(&mut self, genomes: &[CppnGenome]) -> Result<Vec<f64>, EvalError> {
        Ok(genomes.iter().map(&mut self.0).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Neat,
    Afpo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub params: NeatParams,
    pub seed: u64,
    pub input_count: usize,
    pub output_count: usize,
    /// Generations between checkpoints; 0 disables them.
    pub checkpoint_interval: usize,
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<(), EvolutionError> {
        self.params.validate().map_err(EvolutionError::Config)?;
        if self.input_count == 0 || self.output_count == 0 {
            return Err(EvolutionError::Config("genomes need at least one input and one output".into()));
        }
        Ok(())
    }
}

/// One member of a population. `age` is only advanced by AFPO.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub id: u64,
    pub genome: CppnGenome,
    pub fitness: f64,
    pub age: u32,
}

impl Individual {
    /// Higher fitness first, then lower id.
    pub fn ranks_before(&self, other: &Individual) -> bool {
        self.fitness > other.fitness || (self.fitness == other.fitness && self.id < other.id)
    }
}

/// Index of the best individual by fitness, ties to the lower id.
pub fn best_index(pop: &[Individual]) -> Option<usize> {
    (0..pop.len()).reduce(|best, i| if pop[i].ranks_before(&pop[best]) { i } else { best })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub species_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub front_size: Option<usize>,
    pub best_id: u64,
    pub best_genome: CppnGenome,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvolutionRecord {
    pub generations: Vec<GenerationStats>,
}

impl EvolutionRecord {
    pub fn best_series(&self) -> Vec<f64> {
        self.generations.iter().map(|g| g.best_fitness).collect()
    }
}

/// Complete loop state at the end of a generation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub optimizer: Optimizer,
    pub generation: usize,
    pub next_id: u64,
    pub rng: ChaCha8Rng,
    pub registry: InnovationRegistry,
    pub population: Vec<Individual>,
    pub species: Vec<Species>,
    pub record: EvolutionRecord,
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// Mutable loop state shared by both optimizers.
struct LoopState {
    optimizer: Optimizer,
    generation: usize,
    next_id: u64,
    rng: ChaCha8Rng,
    registry: InnovationRegistry,
    population: Vec<Individual>,
    species: Vec<Species>,
    record: EvolutionRecord,
}

impl LoopState {
    fn new(optimizer: Optimizer, cfg: &EvolutionConfig) -> Self {
        use rand::SeedableRng;
        Self {
            optimizer,
            generation: 0,
            next_id: 0,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            registry: InnovationRegistry::new(cfg.input_count, cfg.output_count),
            population: Vec::new(),
            species: Vec::new(),
            record: EvolutionRecord::default(),
        }
    }

    fn fresh(&mut self, cfg: &EvolutionConfig) -> Individual {
        let genome = CppnGenome::initial(cfg.input_count, cfg.output_count, &mut self.rng);
        self.next_id += 1;
        Individual { id: self.next_id - 1, genome, fitness: f64::NAN, age: 0 }
    }

    fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            optimizer: self.optimizer,
            generation: self.generation,
            next_id: self.next_id,
            rng: self.rng.clone(),
            registry: self.registry.clone(),
            population: self.population.clone(),
            species: self.species.clone(),
            record: self.record.clone(),
        }
    }

    fn record(&mut self, observer: &mut dyn RunObserver, species_count: Option<usize>, front_size: Option<usize>) {
        let s = stats(self.generation, &self.population, species_count, front_size);
        observer.on_generation(&s);
        self.record.generations.push(s);
    }

    /// Writes a checkpoint of the state as it was before the failing
    /// generation began, then hands back the error.
    fn fail(
        &mut self,
        observer: &mut dyn RunObserver,
        rng: ChaCha8Rng,
        registry: InnovationRegistry,
        next_id: u64,
        err: EvolutionError,
    ) -> EvolutionError {
        self.rng = rng;
        self.registry = registry;
        self.next_id = next_id;
        match emit_checkpoint(observer, &self.checkpoint()) {
            Ok(()) => err,
            Err(e) => e,
        }
    }

    fn maybe_checkpoint(&self, cfg: &EvolutionConfig, observer: &mut dyn RunObserver) -> Result<(), EvolutionError> {
        if cfg.checkpoint_interval > 0 && self.generation % cfg.checkpoint_interval == 0 {
            emit_checkpoint(observer, &self.checkpoint())?;
        }
        Ok(())
    }

    fn finish(self) -> RunOutcome {
        let best = self.population[best_index(&self.population).expect("non-empty")].clone();
        RunOutcome { best, record: self.record, final_population: self.population }
    }
}

/// Receives per-generation progress and checkpoints.
pub trait RunObserver {
    fn on_generation(&mut self, _stats: &GenerationStats) {}
    fn on_checkpoint(&mut self, _checkpoint: &Checkpoint) -> Result<(), String> {
        Ok(())
    }
}

pub struct NoopObserver;

impl RunObserver for NoopObserver {}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub best: Individual,
    pub record: EvolutionRecord,
    pub final_population: Vec<Individual>,
}

fn stats(generation: usize, pop: &[Individual], species_count: Option<usize>, front_size: Option<usize>) -> GenerationStats {
    let best = &pop[best_index(pop).expect("population is never empty")];
    GenerationStats {
        generation,
        best_fitness: best.fitness,
        mean_fitness: pop.iter().map(|i| i.fitness).sum::<f64>() / pop.len() as f64,
        species_count,
        front_size,
        best_id: best.id,
        best_genome: best.genome.clone(),
    }
}

/// Fills in the fitness of `pop[from..]`.
fn evaluate_tail(
    evaluator: &mut dyn GenomeEvaluator,
    pop: &mut [Individual],
    from: usize,
    generation: usize,
) -> Result<(), EvolutionError> {
    let genomes: Vec<CppnGenome> = pop[from..].iter().map(|i| i.genome.clone()).collect();
    if genomes.is_empty() {
        return Ok(());
    }
    let fitness = evaluator
        .evaluate(&genomes)
        .map_err(|source| EvolutionError::Evaluation { generation, source })?;
    if fitness.len() != genomes.len() {
        return Err(EvolutionError::EvaluatorContract { expected: genomes.len(), got: fitness.len() });
    }
    for (ind, f) in pop[from..].iter_mut().zip(fitness) {
        ind.fitness = f;
    }
    Ok(())
}

fn emit_checkpoint(observer: &mut dyn RunObserver, cp: &Checkpoint) -> Result<(), EvolutionError> {
    observer.on_checkpoint(cp).map_err(EvolutionError::Checkpoint)
}
