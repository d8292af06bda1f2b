//! The `voxevo` command line: evolution runs, the evaluation server,
//! robustness benchmarking and statistical comparison.

pub mod analyze;
pub mod config;
mod error;
pub mod evolve;
pub mod robustness;
pub mod scenarios;
pub mod serve;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use voxevo_core::analysis::Adjustment;
use voxevo_core::{Evaluator, FitnessConfig, LocalEvaluator, SimConfig};
use voxevo_service::{default_worker_count, RemoteEvaluator, ServerConfig, ServerPool};

pub use config::{EvaluatorSetting, RunConfig};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "voxevo", version, about = "Evolve and benchmark soft voxel actuator morphologies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one evolution experiment from a JSON config.
    Evolve(EvolveArgs),
    /// Serve evaluation requests over HTTP.
    Serve(ServeArgs),
    /// Evaluate morphologies under many controller scenarios.
    Robustness(RobustnessArgs),
    /// Compare robustness CSVs with Kruskal-Wallis and Dunn's test.
    Analyze(AnalyzeArgs),
    /// Print phase-offset tables.
    Scenarios(ScenariosArgs),
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    pub config: PathBuf,
    /// Overrides the config's output directory.
    #[arg(long, env = "OUTPUT_DIR")]
    pub output_dir: Option<PathBuf>,
    /// Validate and print the plan; writes nothing and contacts no server.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "VOXEVO_BIND", default_value = "0.0.0.0:8080")]
    pub bind: String,
    /// Concurrent simulations; defaults to the hardware parallelism.
    #[arg(long, env = "VOXEVO_WORKERS", value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,
    /// Requests allowed to wait for a worker; defaults to 4 per worker.
    #[arg(long)]
    pub queue_bound: Option<usize>,
    #[arg(long, default_value = "voxevo")]
    pub server_id: String,
}

#[derive(Debug, Args)]
pub struct RobustnessArgs {
    /// Morphology JSON files.
    #[arg(required = true)]
    pub morphologies: Vec<PathBuf>,
    #[arg(long, default_value_t = 500)]
    pub scenarios: u32,
    /// Shared by every morphology so all see the same offsets.
    #[arg(long)]
    pub master_seed: u64,
    /// SimConfig JSON; defaults to the standard schedule.
    #[arg(long)]
    pub sim_config: Option<PathBuf>,
    /// FitnessConfig JSON; by default the volume term uses each morphology's lattice.
    #[arg(long)]
    pub fitness_config: Option<PathBuf>,
    /// Evaluation server base URL; repeat for a pool. Local when absent.
    #[arg(long = "endpoint")]
    pub endpoints: Vec<String>,
    #[arg(long, env = "OUTPUT_DIR", default_value = ".")]
    pub output_dir: PathBuf,
    /// Also write each morphology's per-voxel phase offsets.
    #[arg(long)]
    pub dump_offsets: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Robustness CSVs, one group each.
    #[arg(required = true)]
    pub csvs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "displacement")]
    pub metric: analyze::Metric,
    /// Group labels in file order; defaults to file stems.
    #[arg(long = "label")]
    pub labels: Vec<String>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_parser = parse_adjustment, default_value = "bonferroni")]
    pub adjustment: Adjustment,
    #[arg(long, env = "OUTPUT_DIR", default_value = ".")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScenariosArgs {
    #[arg(long)]
    pub master_seed: u64,
    #[arg(long, default_value_t = 0)]
    pub first: u32,
    #[arg(long, default_value_t = 1)]
    pub count: u32,
    #[arg(long, value_parser = scenarios::parse_dims, default_value = "8x8x7")]
    pub dims: voxevo_core::LatticeDims,
}

fn parse_adjustment(s: &str) -> Result<Adjustment, String> {
    match s {
        "bonferroni" => Ok(Adjustment::Bonferroni),
        "none" => Ok(Adjustment::None),
        other => Err(format!("unknown adjustment {other}, expected bonferroni or none")),
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(CliError::io(path))
}

pub(crate) fn build_evaluator(setting: &EvaluatorSetting) -> Result<Box<dyn Evaluator>, CliError> {
    Ok(match setting {
        EvaluatorSetting::Local => Box::new(LocalEvaluator::default()),
        EvaluatorSetting::Remote(pool) => {
            Box::new(RemoteEvaluator::connect(pool).map_err(|e| CliError::Config(format!("evaluator: {e}")))?)
        }
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: cannot read: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column())))
}

pub fn cmd_evolve(args: &EvolveArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load(&args.config)?;
    let out = args.output_dir.clone().unwrap_or_else(|| cfg.output_dir.clone());
    if args.dry_run {
        print!("{}", evolve::plan(&cfg, &out));
        println!("dry run: config is valid; nothing written");
        return Ok(());
    }
    let (_, summary) = evolve::evolve(&cfg, &out)?;
    println!(
        "best fitness {:.5} with {} voxels after {} generations; artifacts in {}",
        summary.best_fitness,
        summary.best_voxel_count,
        summary.generations,
        out.display()
    );
    Ok(())
}

pub fn cmd_serve(args: &ServeArgs) -> Result<(), CliError> {
    let worker_count = args.workers.map_or_else(default_worker_count, |w| w as usize);
    serve::serve(&args.bind, ServerConfig { worker_count, queue_bound: args.queue_bound, server_id: args.server_id.clone() })
}

pub fn cmd_robustness(args: &RobustnessArgs) -> Result<(), CliError> {
    let sim: SimConfig = args.sim_config.as_deref().map(read_json).transpose()?.unwrap_or_default();
    sim.validate().map_err(|e| CliError::Config(format!("sim config: {e}")))?;
    let fitness: Option<FitnessConfig> = args.fitness_config.as_deref().map(read_json).transpose()?;
    if let Some(f) = &fitness {
        f.validate().map_err(|e| CliError::Config(e.to_string()))?;
    }
    let setting = if args.endpoints.is_empty() {
        EvaluatorSetting::Local
    } else {
        EvaluatorSetting::Remote(ServerPool::new(args.endpoints.clone()))
    };
    let evaluator = build_evaluator(&setting)?;
    let job = robustness::RobustnessJob {
        scenarios: args.scenarios,
        master_seed: args.master_seed,
        sim: &sim,
        fitness: fitness.as_ref(),
        evaluator: evaluator.as_ref(),
    };
    for path in robustness::run_files(&job, &args.morphologies, &args.output_dir, args.dump_offsets)? {
        println!("{}", path.display());
    }
    Ok(())
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    if !args.labels.is_empty() && args.labels.len() != args.csvs.len() {
        return Err(CliError::Config(format!("{} labels for {} files", args.labels.len(), args.csvs.len())));
    }
    let groups = args
        .csvs
        .iter()
        .enumerate()
        .map(|(i, path)| {
            let label = args.labels.get(i).cloned().unwrap_or_else(|| {
                let stem = path.file_stem().map_or_else(|| format!("group{i}"), |s| s.to_string_lossy().into_owned());
                stem.trim_end_matches(".robustness").to_owned()
            });
            analyze::Group::load(label, path)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let output = analyze::run_analysis(&groups, args.metric, args.adjustment, args.alpha)?;
    print!("{}", analyze::render(&output.report));
    for path in analyze::write_outputs(&output, &args.output_dir)? {
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

pub fn cmd_scenarios(args: &ScenariosArgs) -> Result<(), CliError> {
    print!("{}", scenarios::offset_table(args.master_seed, args.first, args.count, args.dims));
    Ok(())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Evolve(a) => cmd_evolve(a),
        Command::Serve(a) => cmd_serve(a),
        Command::Robustness(a) => cmd_robustness(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Scenarios(a) => cmd_scenarios(a),
    }
}
