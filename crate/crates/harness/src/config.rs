//! Experiment configuration (JSON).

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use crashbo::baselines::GridRule;
use crashbo::testbed::Registry;
use serde::{Deserialize, Serialize};

use crate::error::{io_error, json_error, HarnessError, Result};
use crate::optimizers::build_optimizer;

pub const DEFAULT_BUDGET_MULTIPLIER: usize = 25;
pub const DEFAULT_SEEDS: usize = 50;
/// Environment variable holding the default worker count.
pub const THREADS_VAR: &str = "CRASHBO_THREADS";

pub const DESK_PROBLEMS: [&str; 4] = ["sphere-crash-d2", "noisy-bowl-d3", "cartpole-d2", "cartpole-d4"];
pub const DESK_OPTIMIZERS: [&str; 8] = ["Rand", "Grid", "PS", "MES-SE-F", "MES-SE-V", "MES-MA-V", "EI-SE-V", "UCB-SE-F"];
pub const DESK_SEEDS: usize = 20;

fn default_budget_multiplier() -> usize {
    DEFAULT_BUDGET_MULTIPLIER
}

fn default_seeds() -> usize {
    DEFAULT_SEEDS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Registry ids.
    pub problems: Vec<String>,
    /// `Rand`, `Grid`, `PS` or BO variant names such as `MES-SE-V`.
    pub optimizers: Vec<String>,
    /// Budget per problem is `budget_multiplier * d`.
    #[serde(default = "default_budget_multiplier")]
    pub budget_multiplier: usize,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default)]
    pub master_seed: u64,
    pub output: PathBuf,
    /// Worker threads; falls back to `CRASHBO_THREADS`, then to the number of cores.
    #[serde(default)]
    pub parallelism: Option<usize>,
    #[serde(default)]
    pub grid_rule: GridRule,
    /// Problem registry file; the built-in registry when absent.
    #[serde(default)]
    pub registry: Option<PathBuf>,
}

impl ExperimentConfig {
    /// The default campaign: four problems, eight optimizers, 20 seeds.
    pub fn desk(output: impl Into<PathBuf>) -> Self {
        Self {
            problems: DESK_PROBLEMS.iter().map(|s| s.to_string()).collect(),
            optimizers: DESK_OPTIMIZERS.iter().map(|s| s.to_string()).collect(),
            budget_multiplier: DEFAULT_BUDGET_MULTIPLIER,
            seeds: DESK_SEEDS,
            master_seed: 0,
            output: output.into(),
            parallelism: None,
            grid_rule: GridRule::Root,
            registry: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_error(path))?;
        serde_json::from_str(&text).map_err(json_error(path))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load_registry(&self) -> Result<Registry> {
        match &self.registry {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(io_error(path))?;
                Ok(Registry::parse(&text)?)
            }
            None => Ok(Registry::builtin()?),
        }
    }

    pub fn budget(&self, dim: usize) -> usize {
        self.budget_multiplier * dim
    }

    /// Worker count from the config, the environment or the machine.
    pub fn threads(&self) -> usize {
        self.parallelism
            .or_else(|| std::env::var(THREADS_VAR).ok().and_then(|v| v.parse().ok()))
            .filter(|n| *n > 0)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    /// Checks every name against `registry` and the optimizer grammar.
    pub fn validate(&self, registry: &Registry) -> Result<()> {
        if self.problems.is_empty() || self.optimizers.is_empty() {
            return Err(HarnessError::Config("need at least one problem and one optimizer".into()));
        }
        if self.seeds == 0 || self.budget_multiplier == 0 {
            return Err(HarnessError::Config("seeds and budget_multiplier must be positive".into()));
        }
        let unknown: Vec<String> = self.problems.iter().filter(|p| registry.get(p).is_err()).cloned().collect();
        if !unknown.is_empty() {
            return Err(HarnessError::UnknownProblems(unknown));
        }
        let unknown: Vec<String> =
            self.optimizers.iter().filter(|o| build_optimizer(o, self.grid_rule).is_err()).cloned().collect();
        if !unknown.is_empty() {
            return Err(HarnessError::UnknownOptimizers(unknown));
        }
        for (what, names) in [("problem", &self.problems), ("optimizer", &self.optimizers)] {
            let mut seen = BTreeSet::new();
            if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
                return Err(HarnessError::Config(format!("{what} {dup:?} listed twice")));
            }
        }
        for p in &self.problems {
            let dim = registry.get(p)?.dim();
            if self.budget(dim) < dim + 1 {
                return Err(HarnessError::Config(format!("budget for {p} is smaller than the initial design")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let c: ExperimentConfig =
            serde_json::from_str(r#"{"problems": ["cartpole-d2"], "optimizers": ["Rand"], "output": "out"}"#).unwrap();
        assert_eq!(c.budget_multiplier, 25);
        assert_eq!(c.seeds, 50);
        assert_eq!(c.grid_rule, GridRule::Root);
        assert_eq!(c.budget(2), 50);
        let again: ExperimentConfig = serde_json::from_str(&c.to_json()).unwrap();
        assert_eq!(again, c);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"problems": [], "optimizers": [], "output": "o", "typo": 1}"#).is_err());
    }

    #[test]
    fn validation_names_the_culprits() {
        let registry = Registry::builtin().unwrap();
        let mut c = ExperimentConfig::desk("out");
        c.validate(&registry).unwrap();
        c.problems.push("nope".into());
        assert!(matches!(c.validate(&registry), Err(HarnessError::UnknownProblems(p)) if p == vec!["nope".to_string()]));
        let mut c = ExperimentConfig::desk("out");
        c.optimizers.push("MES-SE-X".into());
        assert!(matches!(c.validate(&registry), Err(HarnessError::UnknownOptimizers(_))));
        let mut c = ExperimentConfig::desk("out");
        c.optimizers.push("PS".into());
        assert!(matches!(c.validate(&registry), Err(HarnessError::Config(_))));
    }
}
