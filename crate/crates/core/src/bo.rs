//! The Bayesian-optimization loop with crash handling.
//!
//! Variants are named `ACQ-KERNEL[Q][G]-MODE`, e.g. `MES-SE-F` or `MES-SEQ-V`:
//! acquisition `MES`, `UCB` or `EI`; kernel `SE` or `MA` (Matérn 5/2); `Q` for
//! a quadratic prior mean; `G` for the gamma length-scale hyperprior; crash
//! mode `F` (problem-supplied fallback values) or `V` (virtual data points).

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};

use crate::acquisition::{maximize_utility, AcquisitionKind, AcquisitionSpec, SearchOptions, Utility};
use crate::error::{Error, Result};
use crate::gpr::{fit_with, FitOptions, GpConfig, KernelKind, MeanKind, PriorKind};
use crate::problem::{evaluate_unit, Budget, Domain, Evaluation, Optimizer, Problem, Trace};
use crate::rng::Rng as ChaCha;
use crate::vdp::{add_virtual_data_with, DEFAULT_GAMMA};

/// Points closer than this (unit cube) to existing data count as duplicates.
pub const DUPLICATE_RADIUS: f64 = 1e-9;
/// Size of the random offset applied to duplicates.
pub const DUPLICATE_OFFSET: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CrashMode {
    /// Crashed points enter the data with the problem's fallback value, or
    /// not at all when the problem supplies none.
    Fixed,
    /// Crashed points enter the data with adaptive virtual values.
    Virtual,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoConfig {
    pub acquisition: AcquisitionSpec,
    pub gp: GpConfig,
    pub crash_mode: CrashMode,
    pub gamma: f64,
    pub fit: FitOptions,
    pub search: SearchOptions,
}

/// The nine variants of the benchmark study.
pub const STUDY_VARIANTS: [&str; 9] = [
    "MES-SE-F", "UCB-SE-F", "EI-SE-F", "MES-MA-F", "MES-SE-V", "EI-SE-V", "MES-MA-V", "MES-SEQ-V", "MES-SEG-V",
];

impl BoConfig {
    pub fn new(acquisition: AcquisitionKind, gp: GpConfig, crash_mode: CrashMode) -> Self {
        Self {
            acquisition: AcquisitionSpec::new(acquisition),
            gp,
            crash_mode,
            gamma: DEFAULT_GAMMA,
            fit: FitOptions::default(),
            search: SearchOptions::default(),
        }
    }

    pub fn name(&self) -> String {
        self.to_string()
    }

    pub fn validate(&self) -> Result<()> {
        self.acquisition.validate()?;
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Parameter(format!("gamma must be positive, got {}", self.gamma)));
        }
        if self.fit.random_draws == 0 || self.search.candidates_per_dim == 0 {
            return Err(Error::Parameter("search budgets must be positive".into()));
        }
        Ok(())
    }
}

impl fmt::Display for BoConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let acq = match self.acquisition.kind {
            AcquisitionKind::MaxValueEntropy => "MES",
            AcquisitionKind::ConfidenceBound => "UCB",
            AcquisitionKind::ExpectedImprovement => "EI",
        };
        let kernel = match self.gp.kernel {
            KernelKind::SquaredExponential => "SE",
            KernelKind::Matern52 => "MA",
        };
        let mean = if self.gp.mean == MeanKind::Quadratic { "Q" } else { "" };
        let prior = if self.gp.prior == PriorKind::Gamma { "G" } else { "" };
        let mode = match self.crash_mode {
            CrashMode::Fixed => "F",
            CrashMode::Virtual => "V",
        };
        write!(f, "{acq}-{kernel}{mean}{prior}-{mode}")
    }
}

impl FromStr for BoConfig {
    type Err = Error;

    fn from_str(name: &str) -> Result<Self> {
        let bad = || Error::Parameter(format!("unknown BO variant {name:?}"));
        let parts: Vec<&str> = name.split('-').collect();
        let [acq, model, mode] = parts[..] else { return Err(bad()) };
        let acquisition = match acq {
            "MES" => AcquisitionKind::MaxValueEntropy,
            "UCB" => AcquisitionKind::ConfidenceBound,
            "EI" => AcquisitionKind::ExpectedImprovement,
            _ => return Err(bad()),
        };
        let (kernel, mut rest) = if let Some(r) = model.strip_prefix("SE") {
            (KernelKind::SquaredExponential, r)
        } else if let Some(r) = model.strip_prefix("MA") {
            (KernelKind::Matern52, r)
        } else {
            return Err(bad());
        };
        let mut mean = MeanKind::Constant;
        if let Some(r) = rest.strip_prefix('Q') {
            mean = MeanKind::Quadratic;
            rest = r;
        }
        let mut prior = PriorKind::SmoothBox;
        if let Some(r) = rest.strip_prefix('G') {
            prior = PriorKind::Gamma;
            rest = r;
        }
        if !rest.is_empty() {
            return Err(bad());
        }
        let crash_mode = match mode {
            "F" => CrashMode::Fixed,
            "V" => CrashMode::Virtual,
            _ => return Err(bad()),
        };
        Ok(Self::new(acquisition, GpConfig { kernel, mean, prior }, crash_mode))
    }
}

/// `dim + 1` uniform points in the unit cube.
pub fn initial_design(dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha::seed_from_u64(seed);
    (0..=dim).map(|_| uniform_point(dim, &mut rng)).collect()
}

fn uniform_point<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| rng.random::<f64>()).collect()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Moves `x` by a random offset of length [`DUPLICATE_OFFSET`] (then clamped
/// to the cube) if it coincides with an existing point.
fn separate_from<R: Rng + ?Sized>(mut x: Vec<f64>, existing: &[Vec<f64>], rng: &mut R) -> Vec<f64> {
    for _ in 0..100 {
        if !existing.iter().any(|e| distance(e, &x) <= DUPLICATE_RADIUS) {
            break;
        }
        let direction: Vec<f64> = (0..x.len()).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
        let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        for (v, d) in x.iter_mut().zip(&direction) {
            *v = (*v + DUPLICATE_OFFSET * d / norm).clamp(0.0, 1.0);
        }
    }
    x
}

/// Training data for the main surrogate in fixed-fallback mode.
fn fallback_dataset(evaluations: &[Evaluation], domain: &Domain) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let mut inputs = Vec::new();
    let mut values = Vec::new();
    for e in evaluations {
        let value = if e.crashed { e.fallback_objective } else { e.objective };
        if let Some(v) = value {
            inputs.push(domain.normalize(&e.theta)?);
            values.push(v);
        }
    }
    Ok((inputs, values))
}

/// Proposes the next unit-cube query given the history `evaluations`.
///
/// Without usable data, or when the surrogate cannot be fitted, a uniform
/// random point is returned.
pub fn bo_step<R: Rng + ?Sized>(
    evaluations: &[Evaluation],
    domain: &Domain,
    config: &BoConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if evaluations.is_empty() {
        return Err(Error::EmptyInput("history"));
    }
    config.validate()?;
    let dim = domain.dim();
    // drawn unconditionally so that both crash modes consume the stream alike
    let vdp_seed = rng.next_u64();
    let fit_seed = rng.next_u64();
    let acquisition_seed = rng.next_u64();
    let mut acq_rng = ChaCha::seed_from_u64(acquisition_seed);

    let existing: Vec<Vec<f64>> =
        evaluations.iter().map(|e| domain.normalize(&e.theta)).collect::<Result<_>>()?;

    let dataset = match config.crash_mode {
        CrashMode::Fixed => Some(fallback_dataset(evaluations, domain)?),
        CrashMode::Virtual => {
            let mut vdp_rng = ChaCha::seed_from_u64(vdp_seed);
            match add_virtual_data_with(evaluations, domain, &config.gp, config.gamma, &config.fit, &mut vdp_rng) {
                Ok(data) => Some((data.inputs, data.values)),
                Err(Error::NoFeasibleData) => None,
                Err(e @ Error::Factorization { .. }) => {
                    log::warn!("virtual data fit failed ({e}); sampling at random");
                    None
                }
                Err(e) => return Err(e),
            }
        }
    };
    let Some((inputs, values)) = dataset.filter(|(x, _)| !x.is_empty()) else {
        return Ok(uniform_point(dim, &mut acq_rng));
    };

    let mut fit_rng = ChaCha::seed_from_u64(fit_seed);
    let model = match fit_with(dim, &inputs, &values, &config.gp, &config.fit, &mut fit_rng) {
        Ok(m) => m,
        Err(e @ Error::Factorization { .. }) => {
            log::warn!("surrogate fit failed ({e}); sampling at random");
            return Ok(uniform_point(dim, &mut acq_rng));
        }
        Err(e) => return Err(e),
    };

    let successes = evaluations.iter().filter_map(Evaluation::value);
    let j_best = successes
        .reduce(f64::min)
        .unwrap_or_else(|| values.iter().copied().fold(f64::INFINITY, f64::min));
    let utility = match Utility::prepare(&config.acquisition, &model, j_best, &mut acq_rng) {
        Ok(u) => u,
        Err(e @ (Error::Degenerate(_) | Error::Factorization { .. })) => {
            log::warn!("acquisition setup failed ({e}); sampling at random");
            return Ok(uniform_point(dim, &mut acq_rng));
        }
        Err(e) => return Err(e),
    };
    let x = maximize_utility(&model, &utility, &config.search, &mut acq_rng);
    Ok(separate_from(x, &existing, &mut acq_rng))
}

/// Runs the loop until `budget` evaluations, starting from the unit-cube
/// points `initial`.
pub fn run(problem: &dyn Problem, config: &BoConfig, budget: usize, seed: u64, initial: &[Vec<f64>]) -> Result<Trace> {
    config.validate()?;
    if budget < initial.len() {
        return Err(Error::Parameter(format!("budget {budget} smaller than the initial design ({})", initial.len())));
    }
    let domain = problem.domain();
    let mut trace = Trace::new(problem.id(), config.name(), seed);
    let mut counter = Budget::new(budget);
    for x in initial {
        trace.push(evaluate_unit(problem, x, &mut counter)?);
    }
    let mut rng = ChaCha::seed_from_u64(seed);
    while !counter.exhausted() {
        let x = if trace.is_empty() {
            uniform_point(domain.dim(), &mut rng)
        } else {
            bo_step(&trace.evaluations, domain, config, &mut rng)?
        };
        trace.push(evaluate_unit(problem, &x, &mut counter)?);
    }
    Ok(trace)
}

impl Optimizer for BoConfig {
    fn id(&self) -> String {
        self.name()
    }

    fn run(&self, problem: &dyn Problem, budget: usize, seed: u64, initial: &[Vec<f64>]) -> Result<Trace> {
        run(problem, self, budget, seed, initial)
    }
}
