//! Optimizer names accepted in experiment configurations.

use crashbo::baselines::{GridRule, GridSearch, PatternSearch, RandomSearch};
use crashbo::bo::{BoConfig, STUDY_VARIANTS};
use crashbo::Optimizer;

use crate::error::{HarnessError, Result};

pub const RANDOM: &str = "Rand";
pub const GRID: &str = "Grid";
pub const PATTERN: &str = "PS";

/// Baselines followed by the nine BO variants of the study.
pub fn known_optimizers() -> Vec<String> {
    [RANDOM, GRID, PATTERN].iter().chain(STUDY_VARIANTS.iter()).map(|s| s.to_string()).collect()
}

/// Builds the optimizer named `name`. BO names follow
/// `{MES,UCB,EI}-{SE,MA}[Q][G]-{F,V}`.
pub fn build_optimizer(name: &str, grid_rule: GridRule) -> Result<Box<dyn Optimizer>> {
    Ok(match name {
        RANDOM => Box::new(RandomSearch),
        GRID => Box::new(GridSearch { rule: grid_rule }),
        PATTERN => Box::new(PatternSearch),
        _ => {
            let config: BoConfig = name.parse().map_err(|_| HarnessError::UnknownOptimizers(vec![name.to_string()]))?;
            Box::new(config)
        }
    })
}
