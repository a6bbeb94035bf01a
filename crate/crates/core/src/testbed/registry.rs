//! Problem registry: a TOML file listing every problem with its box,
//! construction parameters and best known objective.

use serde::{Deserialize, Serialize};

use super::cartpole::{CartPole, CartPoleMode, CartPoleParams};
use super::synthetic::{SyntheticProblem, SyntheticSpec};
use crate::error::{Error, Result};
use crate::problem::{Domain, Problem};

/// The registry shipped with the crate.
pub const BUILTIN_REGISTRY: &str = include_str!("../../data/problems.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ProblemSpec {
    Synthetic(SyntheticSpec),
    Cartpole {
        lower: Vec<f64>,
        upper: Vec<f64>,
        #[serde(flatten)]
        mode: CartPoleMode,
        #[serde(default)]
        params: CartPoleParams,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known_best: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known_best_theta: Option<Vec<f64>>,
    pub spec: ProblemSpec,
}

impl RegistryEntry {
    pub fn dim(&self) -> usize {
        match &self.spec {
            ProblemSpec::Synthetic(s) => s.dim(),
            ProblemSpec::Cartpole { lower, .. } => lower.len(),
        }
    }

    pub fn build(&self) -> Result<Box<dyn Problem>> {
        Ok(match &self.spec {
            ProblemSpec::Synthetic(_) => Box::new(self.synthetic()?),
            ProblemSpec::Cartpole { .. } => Box::new(self.cartpole()?),
        })
    }

    pub fn synthetic(&self) -> Result<SyntheticProblem> {
        match &self.spec {
            ProblemSpec::Synthetic(spec) => SyntheticProblem::new(&self.id, spec.clone(), self.known_best),
            _ => Err(Error::Registry(format!("{} is not a synthetic problem", self.id))),
        }
    }

    pub fn cartpole(&self) -> Result<CartPole> {
        match &self.spec {
            ProblemSpec::Cartpole { lower, upper, mode, params } => CartPole::new(
                &self.id,
                params.clone(),
                *mode,
                Domain::new(lower.clone(), upper.clone())?,
                self.known_best,
            ),
            _ => Err(Error::Registry(format!("{} is not a cart-pole problem", self.id))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Registry {
    #[serde(rename = "problem", default)]
    pub problems: Vec<RegistryEntry>,
}

impl Registry {
    pub fn builtin() -> Result<Self> {
        Self::parse(BUILTIN_REGISTRY)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let registry: Self = toml::from_str(text).map_err(|e| Error::Registry(e.to_string()))?;
        for (i, entry) in registry.problems.iter().enumerate() {
            if registry.problems[..i].iter().any(|e| e.id == entry.id) {
                return Err(Error::Registry(format!("duplicate problem id {}", entry.id)));
            }
            entry.build()?;
        }
        Ok(registry)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Registry(e.to_string()))
    }

    pub fn ids(&self) -> Vec<&str> {
        self.problems.iter().map(|e| e.id.as_str()).collect()
    }

    pub fn get(&self, id: &str) -> Result<&RegistryEntry> {
        self.problems
            .iter()
            .find(|e| e.id == id)
            .ok_or_else(|| Error::Registry(format!("unknown problem {id:?}")))
    }

    pub fn get_mut(&mut self, id: &str) -> Result<&mut RegistryEntry> {
        self.problems
            .iter_mut()
            .find(|e| e.id == id)
            .ok_or_else(|| Error::Registry(format!("unknown problem {id:?}")))
    }

    pub fn build(&self, id: &str) -> Result<Box<dyn Problem>> {
        self.get(id)?.build()
    }

    pub fn cartpole(&self, id: &str) -> Result<CartPole> {
        self.get(id)?.cartpole()
    }

    pub fn synthetic(&self, id: &str) -> Result<SyntheticProblem> {
        self.get(id)?.synthetic()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_registry_round_trips() {
        let registry = Registry::builtin().unwrap();
        for id in ["sphere-crash-d2", "noisy-bowl-d3", "rosenbrock-crash-d2", "cartpole-d2", "cartpole-d4", "fixture-1d"] {
            let entry = registry.get(id).unwrap();
            let problem = entry.build().unwrap();
            assert_eq!(problem.id(), id);
            assert_eq!(problem.domain().dim(), entry.dim());
            if let Some(theta) = &entry.known_best_theta {
                assert!(problem.domain().contains(theta), "{id}");
            }
        }
        let again = Registry::parse(&registry.to_toml().unwrap()).unwrap();
        assert_eq!(again, registry);
    }

    #[test]
    fn registry_rejects_bad_files() {
        assert!(Registry::parse("[[problem]]\nid = 3").is_err());
        let one = "[[problem]]\nid = \"a\"\n[problem.spec]\ntype = \"cartpole\"\nlower = [0.0]\nupper = [1.0]\nmode = \"d4\"\n";
        assert!(Registry::parse(one).is_err());
        assert!(Registry::builtin().unwrap().get("nope").is_err());
    }
}
