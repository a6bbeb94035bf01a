//! Bayesian optimization for simulation-based tuning problems whose queries
//! may crash, together with baseline optimizers, crash-constrained test
//! problems and benchmark metrics.

pub mod acquisition;
pub mod baselines;
pub mod bo;
pub mod error;
pub mod gpr;
pub mod landscape;
pub mod metrics;
pub mod problem;
pub mod rng;
pub mod stats;
pub mod testbed;
pub mod vdp;

pub use error::{Error, Result};
pub use problem::{evaluate, evaluate_unit, incumbent, Budget, Domain, Evaluation, Optimizer, Problem, Response, Trace};
