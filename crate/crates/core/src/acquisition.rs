//! Acquisition functions (expected improvement, confidence bound, max-value
//! entropy search) and their maximization over the unit cube.
//!
//! All acquisitions are phrased for minimization of the objective and
//! exposed as utilities to be maximized.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gpr::GpModel;
use crate::stats::{inverse_mills, norm_cdf, norm_log_cdf, norm_pdf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AcquisitionKind {
    ExpectedImprovement,
    ConfidenceBound,
    MaxValueEntropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionSpec {
    pub kind: AcquisitionKind,
    /// Confidence-bound exploration weight.
    pub beta: f64,
    /// Number of sampled minimum values for max-value entropy search.
    pub mes_samples: usize,
}

impl AcquisitionSpec {
    pub fn new(kind: AcquisitionKind) -> Self {
        Self { kind, beta: 3.0, mes_samples: 10 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Parameter(format!("beta must be positive, got {}", self.beta)));
        }
        if self.mes_samples == 0 {
            return Err(Error::Parameter("at least one min-value sample is required".into()));
        }
        Ok(())
    }
}

/// Search budget for [`maximize_acquisition`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Random candidates per input dimension.
    pub candidates_per_dim: usize,
    pub refined: usize,
    pub max_steps: usize,
    pub fd_step: f64,
    /// Quasi-random points used to fit the min-value distribution.
    pub mes_grid: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { candidates_per_dim: 2000, refined: 5, max_steps: 50, fd_step: 1e-5, mes_grid: 1000 }
    }
}

/// Expected improvement below `j_best`.
pub fn ei(mu: f64, sigma: f64, j_best: f64) -> f64 {
    let diff = j_best - mu;
    if sigma <= 0.0 {
        return diff.max(0.0);
    }
    let z = diff / sigma;
    (diff * norm_cdf(z) + sigma * norm_pdf(z)).max(0.0)
}

/// Lower confidence bound `mu - beta * sigma` (smaller is better).
pub fn ucb(mu: f64, sigma: f64, beta: f64) -> f64 {
    mu - beta * sigma
}

/// Entropy-reduction term for one standardized gap `gamma = (mu - y*) / sigma`.
pub fn mes_term(gamma: f64) -> f64 {
    (0.5 * gamma * inverse_mills(gamma) - norm_log_cdf(gamma)).max(0.0)
}

/// Max-value entropy search utility from a posterior `(mu, sigma)`.
pub fn mes_from_moments(mu: f64, sigma: f64, min_samples: &[f64]) -> f64 {
    if sigma <= 0.0 || min_samples.is_empty() {
        return 0.0;
    }
    min_samples.iter().map(|y| mes_term((mu - y) / sigma)).sum::<f64>() / min_samples.len() as f64
}

pub fn mes(model: &GpModel, x: &[f64], min_samples: &[f64]) -> f64 {
    let (mu, sigma) = model.predict(x);
    // below the jitter floor the value is known
    if sigma <= 1e-3 * crate::gpr::JITTER_STD * model.standardization().scale {
        return 0.0;
    }
    mes_from_moments(mu, sigma, min_samples)
}

fn first_primes(count: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(count);
    let mut candidate = 2u64;
    while primes.len() < count {
        if primes.iter().all(|p| candidate % p != 0) {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Randomly shifted Halton points in the unit cube.
pub fn halton_points<R: Rng + ?Sized>(count: usize, dim: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let primes = first_primes(dim);
    let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    (1..=count as u64)
        .map(|i| {
            primes
                .iter()
                .zip(&shift)
                .map(|(&p, s)| (radical_inverse(i, p) + s).fract())
                .collect()
        })
        .collect()
}

/// Samples of the minimum objective value under the posterior, from a Gumbel
/// fit to `Pr(min < y) = 1 - prod_c Phi((mu_c - y) / sigma_c)` over a
/// quasi-random candidate set plus the training inputs. Samples never exceed
/// the smallest posterior mean on that set.
pub fn sample_min_values<R: Rng + ?Sized>(model: &GpModel, count: usize, rng: &mut R) -> Result<Vec<f64>> {
    sample_min_values_with(model, count, SearchOptions::default().mes_grid, rng)
}

pub fn sample_min_values_with<R: Rng + ?Sized>(model: &GpModel, count: usize, grid: usize, rng: &mut R) -> Result<Vec<f64>> {
    if model.is_empty() {
        return Err(Error::EmptyInput("min-value sampling needs a model fitted on data"));
    }
    let mut points = halton_points(grid, model.dim(), rng);
    points.extend(model.inputs().iter().cloned());
    let moments: Vec<(f64, f64)> = points.iter().map(|x| model.predict(x)).collect();
    let best_mean = moments.iter().map(|m| m.0).fold(f64::INFINITY, f64::min);
    let max_sigma = moments.iter().map(|m| m.1).fold(0.0, f64::max);
    let scale = model.standardization().scale;

    if max_sigma <= 1e-9 * scale {
        return Ok((0..count).map(|i| best_mean - (i + 1) as f64 * 1e-6 * scale).collect());
    }

    let prob_below = |y: f64| -> f64 {
        let log_none_below: f64 = moments
            .iter()
            .map(|&(mu, sigma)| {
                if sigma > 0.0 {
                    let z = (mu - y) / sigma;
                    // ln Phi(z) > -1e-17 beyond this
                    if z > 8.5 {
                        0.0
                    } else {
                        norm_log_cdf(z)
                    }
                } else if mu > y {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            })
            .sum();
        1.0 - log_none_below.exp()
    };
    let quantile = |q: f64| -> f64 {
        let mut lo = moments.iter().map(|(mu, s)| mu - 10.0 * s).fold(f64::INFINITY, f64::min);
        let mut hi = best_mean + 10.0 * max_sigma;
        for _ in 0..200 {
            if hi - lo <= 1e-10 * scale {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if prob_below(mid) < q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let (q25, q50, q75) = (quantile(0.25), quantile(0.5), quantile(0.75));
    // Gumbel for minima: Pr(min < y) = 1 - exp(-exp((y - a) / b))
    let spread = (-(0.25f64).ln()).ln() - (-(0.75f64).ln()).ln();
    let b = ((q75 - q25) / spread).max(1e-12 * scale);
    let a = q50 - b * std::f64::consts::LN_2.ln();
    Ok((0..count)
        .map(|_| {
            let u: f64 = rng.random_range(f64::EPSILON..1.0);
            (a + b * (-(1.0 - u).ln()).ln()).min(best_mean)
        })
        .collect())
}

/// Acquisition ready to be evaluated: holds everything it needs beyond the model.
#[derive(Debug, Clone)]
pub enum Utility {
    ExpectedImprovement { j_best: f64 },
    ConfidenceBound { beta: f64 },
    MaxValueEntropy { min_samples: Vec<f64> },
}

impl Utility {
    pub fn prepare<R: Rng + ?Sized>(spec: &AcquisitionSpec, model: &GpModel, j_best: f64, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        Ok(match spec.kind {
            AcquisitionKind::ExpectedImprovement => Utility::ExpectedImprovement { j_best },
            AcquisitionKind::ConfidenceBound => Utility::ConfidenceBound { beta: spec.beta },
            AcquisitionKind::MaxValueEntropy => {
                let min_samples = if model.is_empty() {
                    vec![j_best; spec.mes_samples]
                } else {
                    sample_min_values(model, spec.mes_samples, rng)?
                };
                Utility::MaxValueEntropy { min_samples }
            }
        })
    }

    /// Value to maximize at unit-cube point `x`.
    pub fn value(&self, model: &GpModel, x: &[f64]) -> f64 {
        match self {
            Utility::ExpectedImprovement { j_best } => {
                let (mu, sigma) = model.predict(x);
                ei(mu, sigma, *j_best)
            }
            Utility::ConfidenceBound { beta } => {
                let (mu, sigma) = model.predict(x);
                -ucb(mu, sigma, *beta)
            }
            Utility::MaxValueEntropy { min_samples } => mes(model, x, min_samples),
        }
    }
}

fn clamp_unit(x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
}

/// Projected finite-difference gradient ascent with backtracking.
fn refine<F: Fn(&[f64]) -> f64>(f: &F, mut x: Vec<f64>, mut fx: f64, options: &SearchOptions) -> (Vec<f64>, f64) {
    let h = options.fd_step;
    let mut step = 0.05;
    for _ in 0..options.max_steps {
        let grad: Vec<f64> = (0..x.len())
            .map(|i| {
                let mut up = x.clone();
                let mut down = x.clone();
                up[i] = (up[i] + h).min(1.0);
                down[i] = (down[i] - h).max(0.0);
                let width = up[i] - down[i];
                if width > 0.0 {
                    (f(&up) - f(&down)) / width
                } else {
                    0.0
                }
            })
            .collect();
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            break;
        }
        let mut improved = false;
        while step > 1e-7 {
            let mut trial: Vec<f64> = x.iter().zip(&grad).map(|(v, g)| v + step * g / norm).collect();
            clamp_unit(&mut trial);
            let ft = f(&trial);
            if ft > fx {
                x = trial;
                fx = ft;
                improved = true;
                step = (step * 2.0).min(0.5);
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (x, fx)
}

/// Maximizes `utility` over the unit cube: random candidates, the best of
/// which are refined by gradient ascent. Falls back to a uniform random point
/// when the utility is flat over all candidates.
pub fn maximize_utility<R: Rng + ?Sized>(
    model: &GpModel,
    utility: &Utility,
    options: &SearchOptions,
    rng: &mut R,
) -> Vec<f64> {
    let dim = model.dim();
    let f = |x: &[f64]| utility.value(model, x);
    let n_candidates = options.candidates_per_dim * dim;
    let mut scored: Vec<(f64, Vec<f64>)> = (0..n_candidates.max(1))
        .map(|_| {
            let x: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
            (f(&x), x)
        })
        .collect();
    let fallback: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    let (lo, hi) = scored.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (v, _)| (lo.min(*v), hi.max(*v)));
    if !(hi > lo) || !hi.is_finite() {
        return fallback;
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    scored
        .into_iter()
        .take(options.refined.max(1))
        .map(|(v, x)| refine(&f, x, v, options))
        .fold(None::<(Vec<f64>, f64)>, |best, (x, v)| match best {
            Some((bx, bv)) if bv >= v => Some((bx, bv)),
            _ => Some((x, v)),
        })
        .map(|(x, _)| x)
        .unwrap_or(fallback)
}

/// Next query point (unit cube) maximizing the acquisition `spec`.
pub fn maximize_acquisition<R: Rng + ?Sized>(model: &GpModel, spec: &AcquisitionSpec, j_best: f64, rng: &mut R) -> Result<Vec<f64>> {
    let utility = Utility::prepare(spec, model, j_best, rng)?;
    Ok(maximize_utility(model, &utility, &SearchOptions::default(), rng))
}
