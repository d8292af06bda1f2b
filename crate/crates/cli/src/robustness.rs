use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use voxevo_core::protocol::{evaluate_batch, Evaluator};
use voxevo_core::simulator::phase_offset;
use voxevo_core::{ControllerScenario, FitnessConfig, Morphology, SimConfig};

use crate::{write_file, CliError};

/// One scenario's outcome, as written to the per-morphology CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    pub scenario_id: u32,
    pub displacement: f64,
    pub voxel_count: usize,
    pub delta_score: f64,
    pub nu_score: f64,
    pub fitness: f64,
}

pub struct RobustnessJob<'a> {
    pub scenarios: u32,
    pub master_seed: u64,
    pub sim: &'a SimConfig,
    /// `None` sizes the volume term to each morphology's own lattice.
    pub fitness: Option<&'a FitnessConfig>,
    pub evaluator: &'a dyn Evaluator,
}

impl RobustnessJob<'_> {
    pub fn scenario_list(&self) -> Vec<ControllerScenario> {
        (0..self.scenarios).map(|scenario_id| ControllerScenario { master_seed: self.master_seed, scenario_id }).collect()
    }

    pub fn run(&self, m: &Morphology) -> Result<Vec<RobustnessRow>, CliError> {
        let fitness = match self.fitness {
            Some(f) => f.clone(),
            None => FitnessConfig { upsilon_max: m.dims().volume(), ..FitnessConfig::default() },
        };
        let results = evaluate_batch(m, &self.scenario_list(), self.sim, &fitness, self.evaluator)
            .map_err(|e| CliError::Other(e.to_string()))?;
        Ok(results
            .into_iter()
            .zip(0..)
            .map(|((resp, f), scenario_id)| RobustnessRow {
                scenario_id,
                displacement: resp.displacement,
                voxel_count: resp.voxel_count,
                delta_score: f.delta_score,
                nu_score: f.nu_score,
                fitness: f.value,
            })
            .collect())
    }
}

pub fn rows_to_csv(rows: &[RobustnessRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("rows serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}

pub fn read_rows(path: &Path) -> Result<Vec<RobustnessRow>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .collect::<Result<Vec<RobustnessRow>, _>>()
        .map_err(|e| CliError::Other(format!("{}: {e}", path.display())))
}

/// Phase offsets at every filled voxel, one row per (scenario, voxel).
pub fn offsets_csv(m: &Morphology, scenarios: &[ControllerScenario]) -> String {
    let mut out = String::from("scenario_id,x,y,z,phase\n");
    for s in scenarios {
        for ((x, y, z), _) in m.filled() {
            let phase = phase_offset(s, m.dims(), x, y, z).expect("filled voxels lie in the lattice");
            out.push_str(&format!("{},{x},{y},{z},{phase:?}\n", s.scenario_id));
        }
    }
    out
}

pub fn load_morphology(path: &Path) -> Result<Morphology, CliError> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    Morphology::from_json(&text).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "morphology".into(), |s| s.to_string_lossy().into_owned())
}

pub fn csv_path(out: &Path, morphology: &Path) -> PathBuf {
    out.join(format!("{}.robustness.csv", stem(morphology)))
}

pub fn offsets_path(out: &Path, morphology: &Path) -> PathBuf {
    out.join(format!("{}.offsets.csv", stem(morphology)))
}

/// Evaluates each file; a failing file is reported and skipped.
pub fn run_files(job: &RobustnessJob, files: &[PathBuf], out: &Path, dump_offsets: bool) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(out).map_err(CliError::io(out))?;
    let mut written = Vec::new();
    let mut failed = 0;
    for file in files {
        let result = load_morphology(file).and_then(|m| {
            let rows = job.run(&m)?;
            let path = csv_path(out, file);
            write_file(&path, &rows_to_csv(&rows))?;
            if dump_offsets {
                write_file(&offsets_path(out, file), &offsets_csv(&m, &job.scenario_list()))?;
            }
            Ok(path)
        });
        match result {
            Ok(path) => {
                log::info!("{} -> {}", file.display(), path.display());
                written.push(path);
            }
            Err(e) => {
                eprintln!("error: {e}");
                failed += 1;
            }
        }
    }
    if failed > 0 {
        return Err(CliError::PartialFailure { failed, total: files.len() });
    }
    Ok(written)
}
