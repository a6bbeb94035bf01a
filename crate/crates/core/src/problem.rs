//! Problem abstraction, box domains, evaluation records and budget accounting.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Box constraints `lower <= theta <= upper`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::Domain("domain needs at least one dimension".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::Domain(format!(
                "bound lengths differ: {} vs {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Domain(format!("invalid bounds [{lo}, {hi}] in dimension {i}")));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn unit(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim], vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(t, (lo, hi))| *lo <= *t && *t <= *hi)
    }

    pub fn normalize(&self, theta: &[f64]) -> Result<Vec<f64>> {
        if !self.contains(theta) {
            return Err(Error::Domain(format!("point {theta:?} outside the box")));
        }
        Ok(theta
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(t, (lo, hi))| (t - lo) / (hi - lo))
            .collect())
    }

    /// Maps a unit-cube point back to the box. Inputs are clamped to `[0, 1]`
    /// so that the result never leaves the box through round-off.
    pub fn denormalize(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(u, (lo, hi))| {
                let u = u.clamp(0.0, 1.0);
                (lo + u * (hi - lo)).clamp(*lo, *hi)
            })
            .collect()
    }
}

/// What a black-box query returns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Response {
    Success(f64),
    /// The simulation failed. `fallback` is the problem's native crash value,
    /// used by optimizers that do not treat crashes specially.
    Crash { fallback: Option<f64> },
}

/// A deterministic black-box objective on a box.
///
/// Implementations must be pure: the same `theta` gives a bit-identical
/// response, from any thread.
pub trait Problem: Send + Sync {
    fn id(&self) -> &str;
    fn domain(&self) -> &Domain;
    fn evaluate(&self, theta: &[f64]) -> std::result::Result<Response, String>;
    fn known_best(&self) -> Option<f64> {
        None
    }
}

/// One recorded black-box query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub theta: Vec<f64>,
    pub objective: Option<f64>,
    pub crashed: bool,
    pub fallback_objective: Option<f64>,
    pub wall_time: f64,
}

impl Evaluation {
    pub fn success(theta: Vec<f64>, objective: f64) -> Self {
        Self { theta, objective: Some(objective), crashed: false, fallback_objective: None, wall_time: 0.0 }
    }

    pub fn crash(theta: Vec<f64>, fallback_objective: Option<f64>) -> Self {
        Self { theta, objective: None, crashed: true, fallback_objective, wall_time: 0.0 }
    }

    /// Objective of a successful evaluation.
    pub fn value(&self) -> Option<f64> {
        if self.crashed {
            None
        } else {
            self.objective
        }
    }

    /// Equality ignoring wall time.
    pub fn same_outcome(&self, other: &Self) -> bool {
        self.theta == other.theta
            && self.objective.map(f64::to_bits) == other.objective.map(f64::to_bits)
            && self.crashed == other.crashed
            && self.fallback_objective.map(f64::to_bits) == other.fallback_objective.map(f64::to_bits)
    }
}

/// Counts queries against a fixed limit. Crashed queries count too.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    limit: usize,
    used: usize,
}

impl Budget {
    pub fn new(limit: usize) -> Self {
        Self { limit, used: 0 }
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn used(&self) -> usize {
        self.used
    }

    pub fn remaining(&self) -> usize {
        self.limit - self.used
    }

    pub fn exhausted(&self) -> bool {
        self.used >= self.limit
    }
}

/// Queries `problem` at raw point `theta`, charging one unit of `budget`.
///
/// Evaluator failures and non-finite objectives are recorded as crashes.
pub fn evaluate(problem: &dyn Problem, theta: &[f64], budget: &mut Budget) -> Result<Evaluation> {
    if budget.exhausted() {
        return Err(Error::BudgetExhausted { limit: budget.limit });
    }
    if !problem.domain().contains(theta) {
        return Err(Error::Domain(format!("query {theta:?} outside the box of {}", problem.id())));
    }
    let start = Instant::now();
    let response = problem.evaluate(theta);
    let wall_time = start.elapsed().as_secs_f64();
    budget.used += 1;
    let mut evaluation = match response {
        Ok(Response::Success(value)) if value.is_finite() => Evaluation::success(theta.to_vec(), value),
        Ok(Response::Success(_)) | Err(_) => Evaluation::crash(theta.to_vec(), None),
        Ok(Response::Crash { fallback }) => Evaluation::crash(theta.to_vec(), fallback.filter(|f| f.is_finite())),
    };
    evaluation.wall_time = wall_time;
    Ok(evaluation)
}

/// Queries `problem` at unit-cube point `unit`.
pub fn evaluate_unit(problem: &dyn Problem, unit: &[f64], budget: &mut Budget) -> Result<Evaluation> {
    let theta = problem.domain().denormalize(unit);
    evaluate(problem, &theta, budget)
}

/// Ordered evaluation history of one optimizer run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub problem_id: String,
    pub optimizer_id: String,
    pub seed: u64,
    pub evaluations: Vec<Evaluation>,
}

impl Trace {
    pub fn new(problem_id: impl Into<String>, optimizer_id: impl Into<String>, seed: u64) -> Self {
        Self { problem_id: problem_id.into(), optimizer_id: optimizer_id.into(), seed, evaluations: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.evaluations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.evaluations.is_empty()
    }

    pub fn push(&mut self, evaluation: Evaluation) {
        self.evaluations.push(evaluation);
    }

    /// Best successful objective after each evaluation; `None` until the
    /// first success.
    pub fn best_so_far(&self) -> Vec<Option<f64>> {
        let mut best: Option<f64> = None;
        self.evaluations
            .iter()
            .map(|e| {
                if let Some(v) = e.value() {
                    best = Some(best.map_or(v, |b| b.min(v)));
                }
                best
            })
            .collect()
    }

    pub fn crash_count(&self) -> usize {
        self.evaluations.iter().filter(|e| e.crashed).count()
    }

    /// Equality ignoring wall times.
    pub fn same_outcome(&self, other: &Self) -> bool {
        self.problem_id == other.problem_id
            && self.optimizer_id == other.optimizer_id
            && self.seed == other.seed
            && self.len() == other.len()
            && self.evaluations.iter().zip(&other.evaluations).all(|(a, b)| a.same_outcome(b))
    }
}

/// Common interface of all optimizers in the benchmark.
///
/// `initial` holds unit-cube points evaluated first, shared across optimizers
/// for the same seed. Optimizers that ignore the initial design or the budget
/// (full-factorial grid) document it.
pub trait Optimizer: Send + Sync {
    fn id(&self) -> String;
    fn run(&self, problem: &dyn Problem, budget: usize, seed: u64, initial: &[Vec<f64>]) -> Result<Trace>;
}

/// The successful evaluation with minimal objective, first one on ties.
pub fn incumbent(trace: &Trace) -> Option<(&[f64], f64)> {
    let mut best: Option<(&[f64], f64)> = None;
    for e in &trace.evaluations {
        if let Some(v) = e.value() {
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((&e.theta, v));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Sphere {
        domain: Domain,
    }

    impl Problem for Sphere {
        fn id(&self) -> &str {
            "sphere"
        }
        fn domain(&self) -> &Domain {
            &self.domain
        }
        fn evaluate(&self, theta: &[f64]) -> std::result::Result<Response, String> {
            if theta[0] > 0.9 {
                return Err("solver diverged".into());
            }
            Ok(Response::Success(theta.iter().map(|t| t * t).sum()))
        }
    }

    fn sphere() -> Sphere {
        Sphere { domain: Domain::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap() }
    }

    #[test]
    fn normalize_examples() {
        let d = Domain::new(vec![0.0, 0.0], vec![2.0, 4.0]).unwrap();
        assert_eq!(d.normalize(&[1.0, 1.0]).unwrap(), vec![0.5, 0.25]);
        assert_eq!(d.normalize(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(d.normalize(&[2.0, 4.0]).unwrap(), vec![1.0, 1.0]);
        assert!(matches!(d.normalize(&[2.5, 1.0]), Err(Error::Domain(_))));
        assert!(matches!(d.normalize(&[1.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn invalid_domains_rejected() {
        assert!(Domain::new(vec![], vec![]).is_err());
        assert!(Domain::new(vec![1.0], vec![1.0]).is_err());
        assert!(Domain::new(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(Domain::new(vec![f64::NAN], vec![1.0]).is_err());
    }

    #[test]
    fn evaluate_charges_budget_and_records_crashes() {
        let p = sphere();
        let mut budget = Budget::new(2);
        let e = evaluate(&p, &[0.0, 0.0], &mut budget).unwrap();
        assert!(!e.crashed);
        assert_eq!(e.objective, Some(0.0));
        let c = evaluate(&p, &[0.95, 0.0], &mut budget).unwrap();
        assert!(c.crashed);
        assert_eq!(c.objective, None);
        assert_eq!(budget.used(), 2);
        assert_eq!(
            evaluate(&p, &[0.0, 0.0], &mut budget),
            Err(Error::BudgetExhausted { limit: 2 })
        );
    }

    #[test]
    fn evaluate_rejects_points_outside_the_box() {
        let p = sphere();
        let mut budget = Budget::new(5);
        assert!(matches!(evaluate(&p, &[2.0, 0.0], &mut budget), Err(Error::Domain(_))));
        assert_eq!(budget.used(), 0);
    }

    #[test]
    fn evaluate_is_deterministic() {
        let p = sphere();
        let mut budget = Budget::new(2);
        let a = evaluate(&p, &[0.3, -0.2], &mut budget).unwrap();
        let b = evaluate(&p, &[0.3, -0.2], &mut budget).unwrap();
        assert!(a.same_outcome(&b));
    }

    #[test]
    fn incumbent_examples() {
        let mut t = Trace::new("p", "o", 0);
        assert!(incumbent(&t).is_none());
        t.push(Evaluation::success(vec![0.0], 3.0));
        assert_eq!(incumbent(&t).unwrap().1, 3.0);
        t.push(Evaluation::crash(vec![1.0], Some(-10.0)));
        t.push(Evaluation::success(vec![2.0], 1.0));
        t.push(Evaluation::success(vec![3.0], 2.0));
        let (theta, v) = incumbent(&t).unwrap();
        assert_eq!((theta, v), (&[2.0][..], 1.0));
        assert_eq!(t.best_so_far(), vec![Some(3.0), Some(3.0), Some(1.0), Some(1.0)]);

        let mut crashed = Trace::new("p", "o", 0);
        crashed.push(Evaluation::crash(vec![0.0], None));
        crashed.push(Evaluation::crash(vec![1.0], Some(1.0)));
        assert!(incumbent(&crashed).is_none());
        assert_eq!(crashed.best_so_far(), vec![None, None]);
    }
}
