use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use voxevo_core::evolution::{Checkpoint, EvolutionRecord, GenerationStats, RunObserver};
use voxevo_core::pipeline::{run_experiment, ExperimentOutcome};

use crate::config::{EvaluatorSetting, RunConfig};
use crate::{build_evaluator, write_file, CliError};

pub const RECORD_FILE: &str = "record.csv";
pub const BEST_MORPHOLOGY_FILE: &str = "best_morphology.json";
pub const BEST_GENOME_FILE: &str = "best_genome.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_ECHO_FILE: &str = "config.json";
pub const CHECKPOINT_DIR: &str = "checkpoints";

pub fn checkpoint_path(dir: &Path, generation: usize) -> PathBuf {
    dir.join(CHECKPOINT_DIR).join(format!("gen-{generation:05}.json"))
}

/// Human-readable description of what a run would do.
pub fn plan(cfg: &RunConfig, out: &Path) -> String {
    let p = &cfg.neat;
    let d = cfg.lattice;
    let mut s = String::new();
    let _ = writeln!(s, "algorithm:        {}", cfg.algorithm.name());
    let _ = writeln!(s, "seed:             {}", cfg.seed);
    let _ = writeln!(s, "population:       {}", p.population_size);
    let _ = writeln!(s, "generations:      {}", p.generations);
    let _ = writeln!(s, "lattice:          {}x{}x{} (capacity {})", d.nx, d.ny, d.nz, d.volume());
    let _ = writeln!(s, "fitness:          {:?}, delta_max {}", cfg.fitness.mode, cfg.fitness.delta_max);
    let _ = writeln!(
        s,
        "simulation:       {} s settle + {} s run at dt {}",
        cfg.sim.settle_duration, cfg.sim.run_duration, cfg.sim.timestep
    );
    if cfg.algorithm == voxevo_core::pipeline::Algorithm::Hyperneat {
        let l = cfg.substrate_layout();
        let _ = writeln!(s, "substrate hidden: {:?} ({:?})", l.hidden_layers, l.activation);
    }
    let evaluations = p.population_size * (p.generations + 1);
    let _ = writeln!(s, "evaluations:      at most {evaluations}");
    match &cfg.evaluator {
        EvaluatorSetting::Local => {
            let _ = writeln!(s, "evaluator:        local");
        }
        EvaluatorSetting::Remote(pool) => {
            let _ = writeln!(s, "evaluator:        {} endpoint(s): {}", pool.endpoints.len(), pool.endpoints.join(", "));
        }
    }
    let cp = if cfg.checkpoint_interval == 0 {
        "off".to_owned()
    } else {
        format!("every {} generations", cfg.checkpoint_interval)
    };
    let _ = writeln!(s, "checkpoints:      {cp}");
    let _ = writeln!(s, "output:           {}", out.display());
    s
}

/// Writes checkpoints as they arrive and remembers the latest one.
struct ArtifactObserver {
    dir: PathBuf,
    last_checkpoint: Option<PathBuf>,
}

impl RunObserver for ArtifactObserver {
    fn on_generation(&mut self, s: &GenerationStats) {
        log::info!("generation {:>4}: best {:.5} mean {:.5}", s.generation, s.best_fitness, s.mean_fitness);
    }

    fn on_checkpoint(&mut self, cp: &Checkpoint) -> Result<(), String> {
        let path = checkpoint_path(&self.dir, cp.generation);
        fs::write(&path, cp.to_json()).map_err(|e| format!("{}: {e}", path.display()))?;
        self.last_checkpoint = Some(path);
        Ok(())
    }
}

#[derive(Serialize)]
struct RecordRow {
    generation: usize,
    best_fitness: f64,
    mean_fitness: f64,
    species_count: Option<usize>,
    front_size: Option<usize>,
    best_id: u64,
}

pub fn record_csv(record: &EvolutionRecord) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for g in &record.generations {
        w.serialize(RecordRow {
            generation: g.generation,
            best_fitness: g.best_fitness,
            mean_fitness: g.mean_fitness,
            species_count: g.species_count,
            front_size: g.front_size,
            best_id: g.best_id,
        })
        .expect("record rows serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub algorithm: String,
    pub seed: u64,
    pub generations: usize,
    pub best_fitness: f64,
    pub best_voxel_count: usize,
    pub best_genome_id: u64,
    pub simulations: usize,
}

/// Runs evolution and writes every artifact into `out`.
pub fn evolve(cfg: &RunConfig, out: &Path) -> Result<(ExperimentOutcome, RunSummary), CliError> {
    fs::create_dir_all(out.join(CHECKPOINT_DIR)).map_err(CliError::io(out))?;
    write_file(&out.join(CONFIG_ECHO_FILE), &cfg.to_json())?;
    let evaluator = build_evaluator(&cfg.evaluator)?;
    let mut observer = ArtifactObserver { dir: out.to_path_buf(), last_checkpoint: None };
    let outcome = run_experiment(&cfg.experiment(), evaluator.as_ref(), &mut observer)
        .map_err(|e| CliError::Aborted { reason: e.to_string(), checkpoint: observer.last_checkpoint.clone() })?;

    let run = &outcome.run;
    write_file(&out.join(RECORD_FILE), &record_csv(&run.record))?;
    write_file(&out.join(BEST_MORPHOLOGY_FILE), &outcome.best_morphology.to_json())?;
    write_file(&out.join(BEST_GENOME_FILE), &serde_json::to_string_pretty(&run.best).expect("individual serializes"))?;
    let summary = RunSummary {
        algorithm: cfg.algorithm.name().into(),
        seed: cfg.seed,
        generations: run.record.generations.len().saturating_sub(1),
        best_fitness: run.best.fitness,
        best_voxel_count: outcome.best_morphology.voxel_count(),
        best_genome_id: run.best.id,
        simulations: outcome.simulated,
    };
    write_file(&out.join(SUMMARY_FILE), &serde_json::to_string_pretty(&summary).expect("summary serializes"))?;
    Ok((outcome, summary))
}
