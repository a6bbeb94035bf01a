//! Non-BO optimizers: random search, full-factorial grid and generalized
//! pattern search.
//!
//! For all of them any successful evaluation beats any crashed one, and a
//! crashed point never becomes the incumbent.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{evaluate_unit, Budget, Optimizer, Problem, Trace};
use crate::rng::Rng as ChaCha;

fn uniform_point<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| rng.random::<f64>()).collect()
}

fn check_budget(budget: usize, initial: &[Vec<f64>]) -> Result<()> {
    if budget < initial.len() {
        return Err(Error::Parameter(format!("budget {budget} smaller than the initial design ({})", initial.len())));
    }
    Ok(())
}

/// The initial design followed by uniform random points.
pub fn random_search(problem: &dyn Problem, budget: usize, seed: u64, initial: &[Vec<f64>]) -> Result<Trace> {
    check_budget(budget, initial)?;
    let dim = problem.domain().dim();
    let mut trace = Trace::new(problem.id(), "Rand", seed);
    let mut counter = Budget::new(budget);
    for x in initial {
        trace.push(evaluate_unit(problem, x, &mut counter)?);
    }
    let mut rng = ChaCha::seed_from_u64(seed);
    while !counter.exhausted() {
        trace.push(evaluate_unit(problem, &uniform_point(dim, &mut rng), &mut counter)?);
    }
    Ok(trace)
}

/// How the number of grid levels per axis is derived from the budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridRule {
    /// Smallest `L` with `L^d >= budget`; the grid never has fewer points
    /// than the budget.
    #[default]
    Root,
    /// Smallest `L` with `d^L >= budget`.
    Log,
}

/// Levels per axis for a `dim`-dimensional grid sized for `budget`.
pub fn grid_levels(dim: usize, budget: usize, rule: GridRule) -> Result<usize> {
    if dim < 2 {
        return Err(Error::Parameter(format!("grid levels need d >= 2, got {dim}")));
    }
    let reaches = |base: usize, exponent: usize| -> bool {
        let mut acc: usize = 1;
        for _ in 0..exponent {
            acc = acc.saturating_mul(base);
        }
        acc >= budget
    };
    let mut levels = 2;
    loop {
        let done = match rule {
            GridRule::Root => reaches(levels, dim),
            GridRule::Log => reaches(dim, levels),
        };
        if done {
            return Ok(levels);
        }
        levels += 1;
    }
}

/// Equally spaced levels on `[0, 1]`, endpoints included.
pub fn grid_points(dim: usize, levels: usize) -> Vec<Vec<f64>> {
    let count = levels.pow(dim as u32);
    let step = |i: usize| if levels > 1 { i as f64 / (levels - 1) as f64 } else { 0.5 };
    (0..count)
        .map(|mut k| {
            let mut x = vec![0.0; dim];
            for j in (0..dim).rev() {
                x[j] = step(k % levels);
                k /= levels;
            }
            x
        })
        .collect()
}

/// Evaluates every node of the `levels^d` grid in lexicographic order (first
/// coordinate slowest).
pub fn grid_search(problem: &dyn Problem, levels: usize, seed: u64) -> Result<Trace> {
    if levels < 2 {
        return Err(Error::Parameter("a grid needs at least two levels".into()));
    }
    let points = grid_points(problem.domain().dim(), levels);
    let mut trace = Trace::new(problem.id(), "Grid", seed);
    let mut counter = Budget::new(points.len());
    for x in &points {
        trace.push(evaluate_unit(problem, x, &mut counter)?);
    }
    Ok(trace)
}

pub const INITIAL_MESH: f64 = 0.25;
pub const MIN_MESH: f64 = 1e-10;
// halvings from INITIAL_MESH to MIN_MESH, with slack
const MESH_LEVELS: usize = 40;

/// Generalized pattern search state on the unit cube.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternState {
    pub center: Vec<f64>,
    pub center_value: f64,
    pub mesh: f64,
    /// Next of the `2d` poll directions `+e_0, -e_0, +e_1, ...`.
    pub direction_index: usize,
}

impl PatternState {
    pub fn new(center: Vec<f64>, center_value: f64) -> Self {
        Self { center, center_value, mesh: INITIAL_MESH, direction_index: 0 }
    }

    /// Projected poll point for the current direction.
    pub fn poll_point(&self) -> Vec<f64> {
        let axis = self.direction_index / 2;
        let sign = if self.direction_index % 2 == 0 { 1.0 } else { -1.0 };
        let mut x = self.center.clone();
        x[axis] = (x[axis] + sign * self.mesh).clamp(0.0, 1.0);
        x
    }

    /// Records the outcome of polling the current direction. `value` is
    /// `None` for crashes. Returns whether the center moved.
    pub fn update(&mut self, point: Vec<f64>, value: Option<f64>) -> bool {
        if let Some(v) = value.filter(|v| *v < self.center_value) {
            self.center = point;
            self.center_value = v;
            self.mesh *= 2.0;
            self.direction_index = 0;
            return true;
        }
        self.skip();
        false
    }

    /// Advances past the current direction without an improvement; a full
    /// unsuccessful poll halves the mesh.
    pub fn skip(&mut self) {
        self.direction_index += 1;
        if self.direction_index == 2 * self.center.len() {
            self.direction_index = 0;
            self.mesh *= 0.5;
            if self.mesh < MIN_MESH {
                self.mesh = INITIAL_MESH;
            }
        }
    }
}

/// Opportunistic coordinate pattern search from the best successful initial
/// point. While no evaluation has succeeded, uniform random points are tried.
/// Poll points that coincide with already evaluated points are skipped
/// without charging the budget.
pub fn pattern_search(problem: &dyn Problem, budget: usize, seed: u64, initial: &[Vec<f64>]) -> Result<Trace> {
    check_budget(budget, initial)?;
    let dim = problem.domain().dim();
    let mut trace = Trace::new(problem.id(), "PS", seed);
    let mut counter = Budget::new(budget);
    let mut rng = ChaCha::seed_from_u64(seed);
    let mut visited: HashSet<Vec<u64>> = HashSet::new();
    let key = |x: &[f64]| -> Vec<u64> { x.iter().map(|v| v.to_bits()).collect() };
    let mut best: Option<(Vec<f64>, f64)> = None;
    let record = |x: &[f64], value: Option<f64>, best: &mut Option<(Vec<f64>, f64)>| {
        if let Some(v) = value {
            if best.as_ref().is_none_or(|(_, b)| v < *b) {
                *best = Some((x.to_vec(), v));
            }
        }
    };
    for x in initial {
        let e = evaluate_unit(problem, x, &mut counter)?;
        record(x, e.value(), &mut best);
        visited.insert(key(x));
        trace.push(e);
    }
    while best.is_none() && !counter.exhausted() {
        let x = uniform_point(dim, &mut rng);
        let e = evaluate_unit(problem, &x, &mut counter)?;
        record(&x, e.value(), &mut best);
        visited.insert(key(&x));
        trace.push(e);
    }
    let Some((center, value)) = best else { return Ok(trace) };
    let mut state = PatternState::new(center, value);
    let mut idle = 0usize;
    while !counter.exhausted() {
        let x = state.poll_point();
        if visited.contains(&key(&x)) {
            state.skip();
            idle += 1;
            // every mesh size reachable from here has been polled
            if idle > 2 * dim * MESH_LEVELS {
                let r = uniform_point(dim, &mut rng);
                let e = evaluate_unit(problem, &r, &mut counter)?;
                visited.insert(key(&r));
                trace.push(e);
                idle = 0;
            }
            continue;
        }
        idle = 0;
        let e = evaluate_unit(problem, &x, &mut counter)?;
        let value = e.value();
        visited.insert(key(&x));
        trace.push(e);
        state.update(x, value);
    }
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomSearch;

impl Optimizer for RandomSearch {
    fn id(&self) -> String {
        "Rand".into()
    }

    fn run(&self, problem: &dyn Problem, budget: usize, seed: u64, initial: &[Vec<f64>]) -> Result<Trace> {
        random_search(problem, budget, seed, initial)
    }
}

/// Full-factorial grid sized from the budget. It ignores the initial design
/// and evaluates all `levels^d` nodes even when that exceeds the budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GridSearch {
    pub rule: GridRule,
}

impl Optimizer for GridSearch {
    fn id(&self) -> String {
        "Grid".into()
    }

    fn run(&self, problem: &dyn Problem, budget: usize, seed: u64, _initial: &[Vec<f64>]) -> Result<Trace> {
        let dim = problem.domain().dim();
        let levels = if dim == 1 { budget.max(2) } else { grid_levels(dim, budget, self.rule)? };
        grid_search(problem, levels, seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatternSearch;

impl Optimizer for PatternSearch {
    fn id(&self) -> String {
        "PS".into()
    }

    fn run(&self, problem: &dyn Problem, budget: usize, seed: u64, initial: &[Vec<f64>]) -> Result<Trace> {
        pattern_search(problem, budget, seed, initial)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Domain, Response};
    use crate::Evaluation;

    struct Quadratic {
        domain: Domain,
        center: Vec<f64>,
        crash_below: Option<f64>,
    }

    impl Problem for Quadratic {
        fn id(&self) -> &str {
            "quadratic"
        }
        fn domain(&self) -> &Domain {
            &self.domain
        }
        fn evaluate(&self, theta: &[f64]) -> std::result::Result<Response, String> {
            if self.crash_below.is_some_and(|c| theta[0] < c) {
                return Ok(Response::Crash { fallback: None });
            }
            Ok(Response::Success(theta.iter().zip(&self.center).map(|(t, c)| (t - c) * (t - c)).sum()))
        }
    }

    fn quadratic(center: Vec<f64>) -> Quadratic {
        Quadratic { domain: Domain::unit(center.len()).unwrap(), center, crash_below: None }
    }

    #[test]
    fn grid_level_examples() {
        assert_eq!(grid_levels(5, 125, GridRule::Root).unwrap(), 3);
        assert_eq!(grid_levels(5, 125, GridRule::Log).unwrap(), 3);
        assert_eq!(grid_levels(2, 50, GridRule::Root).unwrap(), 8);
        assert_eq!(grid_levels(2, 50, GridRule::Log).unwrap(), 6);
        assert_eq!(grid_levels(3, 75, GridRule::Root).unwrap(), 5);
        assert_eq!(grid_levels(4, 100, GridRule::Root).unwrap(), 4);
        assert!(grid_levels(1, 25, GridRule::Root).is_err());
        assert!(grid_levels(0, 25, GridRule::Root).is_err());
    }

    #[test]
    fn grid_levels_match_real_arithmetic() {
        for d in 2..=8usize {
            let budget = 25 * d;
            let root = grid_levels(d, budget, GridRule::Root).unwrap();
            assert_eq!(root, ((budget as f64).powf(1.0 / d as f64) - 1e-12).ceil().max(2.0) as usize);
            assert!(root.pow(d as u32) >= budget);
            let log = grid_levels(d, budget, GridRule::Log).unwrap();
            assert_eq!(log, ((budget as f64).ln() / (d as f64).ln() - 1e-12).ceil().max(2.0) as usize);
        }
    }

    #[test]
    fn grid_enumerates_lexicographically_with_endpoints() {
        let p = quadratic(vec![0.5, 0.5]);
        let trace = grid_search(&p, 8, 0).unwrap();
        assert_eq!(trace.len(), 64);
        assert_eq!(trace.evaluations[0].theta, vec![0.0, 0.0]);
        assert_eq!(trace.evaluations[1].theta, vec![0.0, 1.0 / 7.0]);
        assert_eq!(trace.evaluations[8].theta, vec![1.0 / 7.0, 0.0]);
        assert_eq!(trace.evaluations[63].theta, vec![1.0, 1.0]);
        // symmetric objective under x -> 1 - x on each axis
        let v = |i: usize, j: usize| trace.evaluations[8 * i + j].objective.unwrap();
        for i in 0..8 {
            for j in 0..8 {
                assert!((v(i, j) - v(7 - i, 7 - j)).abs() < 1e-15);
                assert!((v(i, j) - v(j, i)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn grid_finds_a_minimum_on_a_node() {
        let p = quadratic(vec![0.25, 0.75, 0.5]);
        let trace = grid_search(&p, 5, 0).unwrap();
        assert_eq!(trace.len(), 125);
        assert_eq!(crate::incumbent(&trace).unwrap().1, 0.0);
    }

    #[test]
    fn random_search_fills_the_budget_deterministically() {
        let p = quadratic(vec![0.3, 0.3]);
        let init = vec![vec![0.1, 0.2], vec![0.5, 0.5], vec![0.9, 0.1]];
        let a = random_search(&p, 50, 9, &init).unwrap();
        let b = random_search(&p, 50, 9, &init).unwrap();
        assert_eq!(a.len(), 50);
        assert!(a.same_outcome(&b));
        assert_eq!(a.evaluations[1].theta, vec![0.5, 0.5]);
        assert!(random_search(&p, 2, 9, &init).is_err());
    }

    #[test]
    fn pattern_search_converges_on_a_convex_quadratic() {
        let minimizer = 0.314_159_265;
        let p = quadratic(vec![minimizer]);
        let trace = pattern_search(&p, 50, 0, &[vec![0.9], vec![0.6]]).unwrap();
        assert_eq!(trace.len(), 50);
        let (theta, _) = crate::incumbent(&trace).unwrap();
        assert!((theta[0] - minimizer).abs() < 1e-3, "{theta:?}");
    }

    #[test]
    fn failed_polls_contract_the_mesh() {
        let mut state = PatternState::new(vec![0.5, 0.5], 0.0);
        for _ in 0..2 {
            for _ in 0..4 {
                let x = state.poll_point();
                assert!(!state.update(x, Some(1.0)));
            }
        }
        assert_eq!(state.mesh, 0.25 * INITIAL_MESH);
        let x = state.poll_point();
        assert!(state.update(x, Some(-1.0)));
        assert_eq!(state.mesh, 0.5 * INITIAL_MESH);
        let x = state.poll_point();
        assert!(!state.update(x, None));
        assert_eq!(state.direction_index, 1);
    }

    #[test]
    fn pattern_search_is_deterministic_and_stays_in_the_box() {
        let p = quadratic(vec![0.95, 0.02]);
        let init = vec![vec![0.5, 0.5], vec![0.2, 0.7], vec![0.8, 0.9]];
        let a = pattern_search(&p, 40, 3, &init).unwrap();
        let b = pattern_search(&p, 40, 3, &init).unwrap();
        assert!(a.same_outcome(&b));
        assert!(a.evaluations.iter().all(|e| p.domain.contains(&e.theta)));
        // no point is evaluated twice
        for (i, e) in a.evaluations.iter().enumerate() {
            assert!(a.evaluations[..i].iter().all(|f| f.theta != e.theta));
        }
        // accepted moves never worsen the incumbent
        let best = a.best_so_far();
        assert!(best.windows(2).all(|w| w[1].unwrap() <= w[0].unwrap()));
    }

    #[test]
    fn pattern_search_restarts_while_everything_crashed() {
        let mut p = quadratic(vec![0.8]);
        p.crash_below = Some(0.5);
        let trace = pattern_search(&p, 30, 1, &[vec![0.1], vec![0.2]]).unwrap();
        assert_eq!(trace.len(), 30);
        let first_success = trace.evaluations.iter().position(|e: &Evaluation| !e.crashed).unwrap();
        assert!(first_success >= 2);
        assert!(trace.evaluations.iter().skip(first_success).any(|e| e.value().is_some()));
        let (theta, _) = crate::incumbent(&trace).unwrap();
        assert!((theta[0] - 0.8).abs() < 1e-2);
    }
}
