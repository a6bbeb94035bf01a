//! Experiment runner, persistence and reporting for the crash-constrained
//! optimization benchmark.

pub mod calibrate;
pub mod config;
pub mod error;
pub mod landscape;
pub mod optimizers;
pub mod report;
pub mod runner;
pub mod svg;
pub mod traces;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use report::{report, ReportOutput};
pub use runner::{run_experiment, run_experiment_with, RunIndex};
