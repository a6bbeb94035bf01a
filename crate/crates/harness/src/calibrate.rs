//! Long random-search plus pattern-search runs to estimate each problem's
//! best objective.

use crashbo::baselines::{pattern_search, random_search};
use crashbo::rng::{derive_seed, stable_hash};
use crashbo::testbed::Registry;
use crashbo::{incumbent, Problem};
use serde::Serialize;

use crate::error::Result;

pub const DEFAULT_CALIBRATION_EVALUATIONS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub problem: String,
    pub evaluations: usize,
    pub best: Option<f64>,
    pub theta: Option<Vec<f64>>,
    /// Whether the registry entry was improved.
    pub improved: bool,
}

/// Best point of `evaluations` random samples followed by `evaluations`
/// pattern-search steps started from it.
pub fn search_best(problem: &dyn Problem, evaluations: usize, seed: u64) -> Result<Option<(Vec<f64>, f64)>> {
    let random = random_search(problem, evaluations, derive_seed(seed, &[stable_hash("random")]), &[])?;
    let mut best = incumbent(&random).map(|(t, v)| (t.to_vec(), v));
    let start: Vec<Vec<f64>> = match &best {
        Some((theta, _)) => vec![problem.domain().normalize(theta)?],
        None => Vec::new(),
    };
    let refined = pattern_search(problem, evaluations, derive_seed(seed, &[stable_hash("pattern")]), &start)?;
    if let Some((theta, v)) = incumbent(&refined) {
        if best.as_ref().is_none_or(|(_, b)| v < *b) {
            best = Some((theta.to_vec(), v));
        }
    }
    Ok(best)
}

/// Runs [`search_best`] on `problem_id` and lowers its registry entry if the
/// search beat it.
pub fn calibrate(registry: &mut Registry, problem_id: &str, evaluations: usize, seed: u64) -> Result<Calibration> {
    let problem = registry.build(problem_id)?;
    let found = search_best(problem.as_ref(), evaluations, seed)?;
    let entry = registry.get_mut(problem_id)?;
    let mut improved = false;
    if let Some((theta, v)) = &found {
        if entry.known_best.is_none_or(|k| *v < k) {
            entry.known_best = Some(*v);
            entry.known_best_theta = Some(theta.clone());
            improved = true;
        }
    }
    Ok(Calibration {
        problem: problem_id.to_string(),
        evaluations: 2 * evaluations,
        best: found.as_ref().map(|f| f.1),
        theta: found.map(|f| f.0),
        improved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_the_sphere_optimum() {
        let mut registry = Registry::builtin().unwrap();
        registry.get_mut("sphere-crash-d2").unwrap().known_best = None;
        let c = calibrate(&mut registry, "sphere-crash-d2", 2000, 1).unwrap();
        assert!(c.improved);
        assert!(c.best.unwrap() < 1e-8, "{c:?}");
        let theta = c.theta.unwrap();
        assert!((theta[0] - 0.3).abs() < 1e-4 && (theta[1] - 0.2).abs() < 1e-4);
        // a second, shorter search cannot beat the analytic optimum
        let mut exact = Registry::builtin().unwrap();
        assert!(!calibrate(&mut exact, "sphere-crash-d2", 100, 2).unwrap().improved);
    }
}
