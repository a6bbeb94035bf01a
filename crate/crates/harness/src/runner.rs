//! Campaign execution: every optimizer on every (problem, seed) pair from a
//! shared initial design.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crashbo::bo::initial_design;
use crashbo::rng::{derive_seed, stable_hash};
use crashbo::testbed::Registry;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{io_error, json_error, HarnessError, Result};
use crate::optimizers::build_optimizer;
use crate::traces::{relative_trace_path, write_atomic, write_trace};

pub const INDEX_FILE: &str = "index.json";
pub const CONFIG_FILE: &str = "config.json";
pub const REGISTRY_FILE: &str = "registry.toml";

const INITIAL_DESIGN_LABEL: &str = "initial-design";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub problem: String,
    pub optimizer: String,
    pub seed: u64,
    pub dim: usize,
    pub budget: usize,
    pub evaluations: usize,
    pub crashes: usize,
    pub best: Option<f64>,
    /// Trace file relative to the results directory.
    pub file: PathBuf,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub problem: String,
    pub optimizer: String,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunIndex {
    pub config: ExperimentConfig,
    pub threads: usize,
    pub wall_time: f64,
    pub runs: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
}

impl RunIndex {
    pub fn load(results: &Path) -> Result<Self> {
        let path = results.join(INDEX_FILE);
        let text = fs::read_to_string(&path).map_err(io_error(&path))?;
        serde_json::from_str(&text).map_err(json_error(&path))
    }
}

/// Seed of the initial design shared by all optimizers on `(problem, seed)`.
pub fn initial_design_seed(master: u64, problem: &str, seed: u64) -> u64 {
    derive_seed(master, &[stable_hash(problem), seed, stable_hash(INITIAL_DESIGN_LABEL)])
}

/// Seed of one optimizer run; independent of which other optimizers run.
pub fn optimizer_seed(master: u64, problem: &str, seed: u64, optimizer: &str) -> u64 {
    derive_seed(master, &[stable_hash(problem), seed, stable_hash(optimizer)])
}

struct Task {
    problem: String,
    optimizer: String,
    seed: u64,
}

/// Runs the campaign and writes traces plus the index to `config.output`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunIndex> {
    run_experiment_with(config, |_: &std::result::Result<RunRecord, RunFailure>| {})
}

/// As [`run_experiment`], calling `progress` after every finished run.
pub fn run_experiment_with<F>(config: &ExperimentConfig, progress: F) -> Result<RunIndex>
where
    F: Fn(&std::result::Result<RunRecord, RunFailure>) + Sync,
{
    let registry = config.load_registry()?;
    config.validate(&registry)?;
    let root = &config.output;
    fs::create_dir_all(root).map_err(io_error(root))?;
    write_atomic(&root.join(CONFIG_FILE), config.to_json().as_bytes())?;
    write_atomic(&root.join(REGISTRY_FILE), registry.to_toml()?.as_bytes())?;

    let tasks: Vec<Task> = config
        .problems
        .iter()
        .flat_map(|p| {
            (0..config.seeds as u64).flat_map(move |s| {
                config.optimizers.iter().map(move |o| Task { problem: p.clone(), optimizer: o.clone(), seed: s })
            })
        })
        .collect();

    let threads = config.threads();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start {threads} workers: {e}")))?;
    let start = Instant::now();
    let outcomes: Vec<std::result::Result<RunRecord, RunFailure>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|task| {
                let outcome = execute(config, &registry, root, task).map_err(|e| RunFailure {
                    problem: task.problem.clone(),
                    optimizer: task.optimizer.clone(),
                    seed: task.seed,
                    error: e.to_string(),
                });
                progress(&outcome);
                outcome
            })
            .collect()
    });

    let mut index = RunIndex {
        config: config.clone(),
        threads,
        wall_time: start.elapsed().as_secs_f64(),
        runs: Vec::new(),
        failures: Vec::new(),
    };
    for outcome in outcomes {
        match outcome {
            Ok(record) => index.runs.push(record),
            Err(failure) => index.failures.push(failure),
        }
    }
    let text = serde_json::to_string_pretty(&index).map_err(json_error(root.join(INDEX_FILE)))?;
    write_atomic(&root.join(INDEX_FILE), text.as_bytes())?;
    Ok(index)
}

fn execute(config: &ExperimentConfig, registry: &Registry, root: &Path, task: &Task) -> Result<RunRecord> {
    let problem = registry.build(&task.problem)?;
    let dim = problem.domain().dim();
    let budget = config.budget(dim);
    let optimizer = build_optimizer(&task.optimizer, config.grid_rule)?;
    let initial = initial_design(dim, initial_design_seed(config.master_seed, &task.problem, task.seed));
    let seed = optimizer_seed(config.master_seed, &task.problem, task.seed, &task.optimizer);
    let start = Instant::now();
    let mut trace = optimizer.run(problem.as_ref(), budget, seed, &initial)?;
    let wall_time = start.elapsed().as_secs_f64();
    trace.seed = task.seed;
    trace.optimizer_id = task.optimizer.clone();
    let file = relative_trace_path(&task.problem, &task.optimizer, task.seed);
    write_trace(&root.join(&file), &trace)?;
    Ok(RunRecord {
        problem: task.problem.clone(),
        optimizer: task.optimizer.clone(),
        seed: task.seed,
        dim,
        budget,
        evaluations: trace.len(),
        crashes: trace.crash_count(),
        best: crashbo::incumbent(&trace).map(|(_, v)| v),
        file,
        wall_time,
    })
}
