//! Landscape statistics along random lines through the optimum: crash
//! fraction, relative size of the optimum's basin and evaluation time.
//!
//! Each line is `theta(r) = theta_star + (r + r0) A` with `r` in `[0, 1]`
//! spanning the box from boundary to boundary.

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{evaluate, Budget, Domain, Problem};
use crate::rng::Rng as ChaCha;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subspace {
    /// Raw-space direction spanning the box along the line.
    pub direction: Vec<f64>,
    pub r0: f64,
}

impl Subspace {
    pub fn point(&self, theta_star: &[f64], r: f64) -> Vec<f64> {
        theta_star.iter().zip(&self.direction).map(|(t, a)| t + (r + self.r0) * a).collect()
    }
}

/// Line through `theta_star` along `direction`, parametrized so that `r = 0`
/// and `r = 1` hit the box boundary.
pub fn subspace_along(domain: &Domain, theta_star: &[f64], direction: &[f64]) -> Result<Subspace> {
    let interior = theta_star.len() == domain.dim()
        && theta_star
            .iter()
            .zip(domain.lower().iter().zip(domain.upper()))
            .all(|(t, (lo, hi))| lo < t && t < hi);
    if !interior {
        return Err(Error::Degenerate(format!("optimum {theta_star:?} is not strictly inside the box")));
    }
    if direction.len() != domain.dim() || direction.iter().all(|a| *a == 0.0) || direction.iter().any(|a| !a.is_finite()) {
        return Err(Error::Parameter("direction must be a finite nonzero vector of the box dimension".into()));
    }
    let mut t_max = f64::INFINITY;
    let mut t_min = f64::NEG_INFINITY;
    for ((t, a), (lo, hi)) in theta_star.iter().zip(direction).zip(domain.lower().iter().zip(domain.upper())) {
        if *a > 0.0 {
            t_max = t_max.min((hi - t) / a);
            t_min = t_min.max((lo - t) / a);
        } else if *a < 0.0 {
            t_max = t_max.min((lo - t) / a);
            t_min = t_min.max((hi - t) / a);
        }
    }
    let span = t_max - t_min;
    Ok(Subspace { direction: direction.iter().map(|a| a * span).collect(), r0: t_min / span })
}

/// Line through `theta_star` in a uniformly random direction.
pub fn make_subspace<R: Rng + ?Sized>(domain: &Domain, theta_star: &[f64], rng: &mut R) -> Result<Subspace> {
    loop {
        let u: Vec<f64> = (0..domain.dim()).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            let u: Vec<f64> = u.iter().map(|v| v / norm).collect();
            return subspace_along(domain, theta_star, &u);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceSample {
    pub subspace: Subspace,
    pub r: Vec<f64>,
    /// Objective per grid point, `None` where the evaluation crashed.
    pub values: Vec<Option<f64>>,
    /// Grid index closest to the optimum.
    pub i_star: usize,
}

impl SubspaceSample {
    fn blocks(&self, j: usize) -> bool {
        match (self.values[j - 1], self.values[j], self.values[j + 1]) {
            (_, None, _) => true,
            (Some(left), Some(v), Some(right)) => v > left && v > right,
            (None, Some(_), _) | (_, Some(_), None) => false,
        }
    }

    /// Successful points with no crash and no strict local maximum strictly
    /// between them and `i_star`.
    pub fn connected(&self) -> Vec<bool> {
        (0..self.values.len())
            .map(|i| {
                if self.values[i].is_none() {
                    return false;
                }
                let (a, b) = if i < self.i_star { (i, self.i_star) } else { (self.i_star, i) };
                (a + 1..b).all(|j| !self.blocks(j))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeReport {
    pub problem_id: String,
    /// Fraction of crashed evaluations.
    pub p_crash: f64,
    /// Fraction of successful evaluations connected to the optimum.
    pub s_opt: f64,
    /// Mean wall time per evaluation (s).
    pub t_sim: f64,
    pub samples: Vec<SubspaceSample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LandscapeOptions {
    pub subspaces: usize,
    pub points: usize,
}

impl Default for LandscapeOptions {
    fn default() -> Self {
        Self { subspaces: 10, points: 51 }
    }
}

/// Evaluates `problem` on `options.subspaces` random lines through
/// `theta_star` with `options.points` equidistant points each.
pub fn analyze(problem: &dyn Problem, theta_star: &[f64], options: LandscapeOptions, seed: u64) -> Result<LandscapeReport> {
    if options.points < 3 || options.subspaces == 0 {
        return Err(Error::Parameter("need at least one line with three points".into()));
    }
    let domain = problem.domain();
    let mut rng = ChaCha::seed_from_u64(seed);
    let mut budget = Budget::new(options.subspaces * options.points);
    let mut samples = Vec::with_capacity(options.subspaces);
    let mut wall_time = 0.0;
    for _ in 0..options.subspaces {
        let subspace = make_subspace(domain, theta_star, &mut rng)?;
        let r: Vec<f64> = (0..options.points).map(|k| k as f64 / (options.points - 1) as f64).collect();
        let mut values = Vec::with_capacity(options.points);
        for &rk in &r {
            let theta: Vec<f64> = subspace
                .point(theta_star, rk)
                .iter()
                .zip(domain.lower().iter().zip(domain.upper()))
                .map(|(t, (lo, hi))| t.clamp(*lo, *hi))
                .collect();
            let e = evaluate(problem, &theta, &mut budget)?;
            wall_time += e.wall_time;
            values.push(e.value());
        }
        let r_star = -subspace.r0;
        let i_star = ((r_star * (options.points - 1) as f64).round() as usize).min(options.points - 1);
        samples.push(SubspaceSample { subspace, r, values, i_star });
    }
    let total = (options.subspaces * options.points) as f64;
    let successes: usize = samples.iter().map(|s| s.values.iter().filter(|v| v.is_some()).count()).sum();
    let connected: usize = samples.iter().map(|s| s.connected().iter().filter(|c| **c).count()).sum();
    Ok(LandscapeReport {
        problem_id: problem.id().to_string(),
        p_crash: 1.0 - successes as f64 / total,
        s_opt: if successes > 0 { connected as f64 / successes as f64 } else { 0.0 },
        t_sim: wall_time / total,
        samples,
    })
}
