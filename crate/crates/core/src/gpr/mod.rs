//! Gaussian-process regression surrogate.
//!
//! Inputs live on the unit cube; outputs are standardized internally and all
//! public predictions are in raw objective units.

mod kernel;
mod mean;
mod model;
pub(crate) mod optim;
mod prior;

pub use kernel::{KernelKind, KernelSpec};
pub use mean::{MeanKind, MeanSpec};
pub use model::{
    fit, fit_with, log_posterior, pack_hyperparameters, unpack_hyperparameters, FitOptions, GpConfig, GpModel,
    Standardization, JITTER_STD,
};
pub use prior::{HyperpriorSpec, PriorKind};

#[cfg(test)]
mod tests;
