use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use crashbo::landscape::LandscapeOptions;
use crashbo::testbed::Registry;
use crashbo_harness::calibrate::{calibrate, DEFAULT_CALIBRATION_EVALUATIONS};
use crashbo_harness::config::{ExperimentConfig, THREADS_VAR};
use crashbo_harness::landscape::{landscape_table, run_landscape, write_landscape};
use crashbo_harness::optimizers::known_optimizers;
use crashbo_harness::{report, run_experiment_with};

#[derive(Parser)]
#[command(name = "crashbo", version, about = "Benchmark optimizers on crash-constrained problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a campaign described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads; overrides the config.
        #[arg(long, env = THREADS_VAR)]
        threads: Option<usize>,
    },
    /// Print the default desk-benchmark config.
    DeskConfig {
        #[arg(long, default_value = "results/desk")]
        output: PathBuf,
    },
    /// Write tables, CSV curves and charts for a results directory.
    Report {
        #[arg(long)]
        results: PathBuf,
    },
    /// Crash fraction and optimum basin size along random lines through the best known point.
    Landscape {
        #[arg(long)]
        problem: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for the JSON record; `<results>/landscape` feeds the report.
        #[arg(long, default_value = "landscape")]
        output: PathBuf,
        #[arg(long, default_value_t = 10)]
        subspaces: usize,
        #[arg(long, default_value_t = 51)]
        points: usize,
        #[arg(long)]
        registry: Option<PathBuf>,
    },
    ListProblems {
        #[arg(long)]
        registry: Option<PathBuf>,
    },
    ListOptimizers,
    /// Estimate best objectives by long random plus pattern search.
    Calibrate {
        #[arg(long, required = true, num_args = 1..)]
        problem: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_CALIBRATION_EVALUATIONS)]
        evaluations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        registry: Option<PathBuf>,
        /// Write the updated registry here.
        #[arg(long)]
        write: Option<PathBuf>,
    },
}

fn load_registry(path: Option<&Path>) -> Result<Registry> {
    Ok(match path {
        Some(p) => Registry::parse(&std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
        None => Registry::builtin()?,
    })
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, threads } => {
            let mut config = ExperimentConfig::load(&config)?;
            if threads.is_some() {
                config.parallelism = threads;
            }
            let registry = config.load_registry()?;
            config.validate(&registry)?;
            let total: usize = config.problems.len() * config.optimizers.len() * config.seeds;
            let done = AtomicUsize::new(0);
            let index = run_experiment_with(&config, |outcome| {
                let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                match outcome {
                    Ok(r) => eprintln!("[{n}/{total}] {} {} seed {}: best {:?} ({:.1} s)", r.problem, r.optimizer, r.seed, r.best, r.wall_time),
                    Err(f) => eprintln!("[{n}/{total}] {} {} seed {} failed: {}", f.problem, f.optimizer, f.seed, f.error),
                }
            })?;
            println!(
                "{} runs, {} failures, {:.1} s on {} threads; results in {}",
                index.runs.len(),
                index.failures.len(),
                index.wall_time,
                index.threads,
                config.output.display()
            );
            if !index.failures.is_empty() {
                anyhow::bail!("{} runs failed; see index.json", index.failures.len());
            }
        }
        Command::DeskConfig { output } => println!("{}", ExperimentConfig::desk(output).to_json()),
        Command::Report { results } => {
            let out = report(&results)?;
            println!("{}", out.markdown);
            for f in &out.files {
                eprintln!("wrote {}", f.display());
            }
        }
        Command::Landscape { problem, seed, output, subspaces, points, registry } => {
            let registry = load_registry(registry.as_deref())?;
            let record = run_landscape(&registry, &problem, seed, LandscapeOptions { subspaces, points })?;
            if record.nudged {
                eprintln!("best known point lies on the boundary; moved to {:?}", record.theta_star);
            }
            let path = write_landscape(&output, &record)?;
            println!("{}", landscape_table(std::slice::from_ref(&record)));
            eprintln!("wrote {}", path.display());
        }
        Command::ListProblems { registry } => {
            let registry = load_registry(registry.as_deref())?;
            for e in &registry.problems {
                let best = e.known_best.map_or("-".to_string(), |b| format!("{b}"));
                println!("{}\td={}\tknown_best={}\t{}", e.id, e.dim(), best, e.description.as_deref().unwrap_or(""));
            }
        }
        Command::ListOptimizers => {
            for name in known_optimizers() {
                println!("{name}");
            }
        }
        Command::Calibrate { problem, evaluations, seed, registry, write } => {
            let mut reg = load_registry(registry.as_deref())?;
            for id in &problem {
                let c = calibrate(&mut reg, id, evaluations, seed)?;
                println!("{}", serde_json::to_string(&c)?);
            }
            if let Some(path) = write {
                std::fs::write(&path, reg.to_toml()?).with_context(|| format!("writing {}", path.display()))?;
            }
        }
    }
    Ok(())
}
