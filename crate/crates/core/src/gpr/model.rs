use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kernel::{KernelKind, KernelSpec};
use super::mean::{MeanKind, MeanSpec};
use super::optim::{maximize, AscentOptions};
use super::prior::{HyperpriorSpec, PriorKind};
use crate::error::{Error, Result};
use crate::stats::LN_SQRT_2PI;

/// Fixed regularization standard deviation added to the covariance diagonal
/// (as a variance, in standardized output units).
pub const JITTER_STD: f64 = 4.5400e-05;

const LN_LENGTH_SCALE_BOUNDS: (f64, f64) = (-6.907_755_278_982_137, 4.605_170_185_988_092); // ln 1e-3, ln 1e2
const LN_SIGNAL_VARIANCE_BOUNDS: (f64, f64) = (-13.815_510_557_964_274, 9.210_340_371_976_184); // ln 1e-6, ln 1e4
const MEAN_COEFFICIENT_BOUND: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GpConfig {
    pub kernel: KernelKind,
    pub mean: MeanKind,
    pub prior: PriorKind,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self { kernel: KernelKind::SquaredExponential, mean: MeanKind::Constant, prior: PriorKind::SmoothBox }
    }
}

/// Hyperparameter search budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Random hyperparameter draws scored by log posterior.
    pub random_draws: usize,
    /// How many of the best draws are refined by gradient ascent.
    pub refined_draws: usize,
    pub max_ascent_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { random_draws: 50, refined_draws: 3, max_ascent_iterations: 100 }
    }
}

/// Affine map between raw objective units and the GP's working units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub shift: f64,
    pub scale: f64,
}

fn median_of_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn linear_quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

impl Standardization {
    pub fn identity() -> Self {
        Self { shift: 0.0, scale: 1.0 }
    }

    /// Median shift and IQR/1.349 scale. Falls back to the standard deviation
    /// when the IQR collapses, and to 1 when that collapses too.
    pub fn robust(y: &[f64]) -> Self {
        if y.is_empty() {
            return Self::identity();
        }
        let mut sorted = y.to_vec();
        sorted.sort_by(f64::total_cmp);
        let shift = median_of_sorted(&sorted);
        let magnitude = sorted.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let iqr = linear_quantile(&sorted, 0.75) - linear_quantile(&sorted, 0.25);
        let mut scale = iqr / 1.349;
        if !(scale > 1e-12 * magnitude) {
            let mean = y.iter().sum::<f64>() / y.len() as f64;
            scale = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
        }
        if !(scale > 1e-12 * magnitude) {
            scale = 1.0;
        }
        Self { shift, scale }
    }

    pub fn forward(&self, raw: f64) -> f64 {
        (raw - self.shift) / self.scale
    }

    pub fn backward(&self, standardized: f64) -> f64 {
        self.shift + self.scale * standardized
    }
}

/// Packs hyperparameters as `[ln l_1..ln l_d, ln sf2, mean coefficients...]`.
pub fn pack_hyperparameters(kernel: &KernelSpec, mean: &MeanSpec) -> Vec<f64> {
    let mut p: Vec<f64> = kernel.length_scales.iter().map(|l| l.ln()).collect();
    p.push(kernel.signal_variance.ln());
    p.extend_from_slice(&mean.coefficients);
    p
}

pub fn unpack_hyperparameters(kernel: KernelKind, mean: MeanKind, dim: usize, p: &[f64]) -> (KernelSpec, MeanSpec) {
    let kernel = KernelSpec {
        kind: kernel,
        length_scales: p[..dim].iter().map(|u| u.exp()).collect(),
        signal_variance: p[dim].exp(),
    };
    let mean = MeanSpec { kind: mean, coefficients: p[dim + 1..].to_vec() };
    (kernel, mean)
}

fn covariance(kernel: &KernelSpec, inputs: &[Vec<f64>], noise_variance: f64) -> DMatrix<f64> {
    let n = inputs.len();
    let mut k = DMatrix::zeros(n, n);
    for a in 0..n {
        k[(a, a)] = kernel.signal_variance + noise_variance;
        for b in 0..a {
            let v = kernel.from_sq_dist(kernel.scaled_sq_dist(&inputs[a], &inputs[b]));
            k[(a, b)] = v;
            k[(b, a)] = v;
        }
    }
    k
}

fn check_inputs(kernel: &KernelSpec, mean: &MeanSpec, inputs: &[Vec<f64>], y: &[f64]) -> Result<()> {
    kernel.validate()?;
    mean.check_dim(kernel.dim())?;
    if inputs.len() != y.len() {
        return Err(Error::Parameter(format!("{} inputs but {} outputs", inputs.len(), y.len())));
    }
    if let Some(x) = inputs.iter().find(|x| x.len() != kernel.dim()) {
        return Err(Error::Parameter(format!("input {x:?} does not have dimension {}", kernel.dim())));
    }
    Ok(())
}

/// Log marginal likelihood plus log length-scale hyperprior, optionally with
/// its gradient over the packed hyperparameters. `None` if the covariance
/// is not positive definite.
fn log_posterior_impl(
    kernel: &KernelSpec,
    mean: &MeanSpec,
    prior: &HyperpriorSpec,
    inputs: &[Vec<f64>],
    y: &[f64],
    noise_variance: f64,
    with_gradient: bool,
) -> Option<(f64, Vec<f64>)> {
    let n = inputs.len();
    let d = kernel.dim();
    let chol = covariance(kernel, inputs, noise_variance).cholesky()?;
    let residual = DVector::from_iterator(n, inputs.iter().zip(y).map(|(x, v)| v - mean.eval(x)));
    let alpha = chol.solve(&residual);
    let l = chol.l_dirty();
    let log_det: f64 = (0..n).map(|i| l[(i, i)].ln()).sum::<f64>() * 2.0;
    let mut value = -0.5 * residual.dot(&alpha) - 0.5 * log_det - n as f64 * LN_SQRT_2PI;

    let mut grad = vec![0.0; d + 1 + mean.coefficients.len()];
    for (i, l) in kernel.length_scales.iter().enumerate() {
        let (lp, g) = prior.log_density(l.ln());
        value += lp;
        grad[i] = g;
    }
    if !value.is_finite() {
        return None;
    }
    if !with_gradient {
        return Some((value, grad));
    }

    let k_inv = chol.inverse();
    let mut scaled = vec![0.0; d];
    for a in 0..n {
        let w_aa = alpha[a] * alpha[a] - k_inv[(a, a)];
        grad[d] += 0.5 * w_aa * kernel.signal_variance;
        for b in 0..a {
            let mut r2 = 0.0;
            for (i, s) in scaled.iter_mut().enumerate() {
                let t = (inputs[a][i] - inputs[b][i]) / kernel.length_scales[i];
                *s = t * t;
                r2 += *s;
            }
            let (k, factor) = kernel.value_and_scale_factor(r2);
            let w_ab = alpha[a] * alpha[b] - k_inv[(a, b)];
            grad[d] += w_ab * k;
            let wf = w_ab * factor;
            for (g, s) in grad[..d].iter_mut().zip(&scaled) {
                *g += wf * s;
            }
        }
    }
    let mut basis = Vec::with_capacity(mean.coefficients.len());
    for (x, a) in inputs.iter().zip(alpha.iter()) {
        mean.basis(x, &mut basis);
        for (g, h) in grad[d + 1..].iter_mut().zip(&basis) {
            *g += h * a;
        }
    }
    Some((value, grad))
}

/// Log marginal likelihood of `y` (jitter included) plus the log hyperprior
/// of the length scales, and the gradient with respect to
/// `[ln l_1..ln l_d, ln sf2, mean coefficients]`.
pub fn log_posterior(
    kernel: &KernelSpec,
    mean: &MeanSpec,
    prior: &HyperpriorSpec,
    inputs: &[Vec<f64>],
    y: &[f64],
) -> Result<(f64, Vec<f64>)> {
    check_inputs(kernel, mean, inputs, y)?;
    prior.validate()?;
    if inputs.is_empty() {
        return Err(Error::EmptyInput("log posterior needs at least one observation"));
    }
    log_posterior_impl(kernel, mean, prior, inputs, y, JITTER_STD * JITTER_STD, true)
        .ok_or_else(|| Error::Factorization { hyperparameters: pack_hyperparameters(kernel, mean) })
}

/// Fitted Gaussian-process surrogate on the unit cube.
#[derive(Debug, Clone)]
pub struct GpModel {
    kernel: KernelSpec,
    mean: MeanSpec,
    noise_variance: f64,
    standardization: Standardization,
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    chol_l: DMatrix<f64>,
    alpha: Vec<f64>,
}

impl GpModel {
    /// Conditions the given hyperparameters on data. Retries once with ten
    /// times the jitter variance if the covariance is not positive definite.
    pub fn new(
        kernel: KernelSpec,
        mean: MeanSpec,
        inputs: Vec<Vec<f64>>,
        y_raw: &[f64],
        standardization: Standardization,
    ) -> Result<Self> {
        check_inputs(&kernel, &mean, &inputs, y_raw)?;
        // canonical order makes predictions independent of the data order
        let mut order: Vec<usize> = (0..inputs.len()).collect();
        order.sort_by(|&a, &b| {
            inputs[a]
                .iter()
                .zip(&inputs[b])
                .map(|(p, q)| p.total_cmp(q))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(y_raw[a].total_cmp(&y_raw[b]))
        });
        let targets: Vec<f64> = order.iter().map(|&i| standardization.forward(y_raw[i])).collect();
        let inputs: Vec<Vec<f64>> = order.iter().map(|&i| inputs[i].clone()).collect();
        let base = JITTER_STD * JITTER_STD;
        for noise_variance in [base, 10.0 * base] {
            if let Some(chol) = covariance(&kernel, &inputs, noise_variance).cholesky() {
                let residual =
                    DVector::from_iterator(inputs.len(), inputs.iter().zip(&targets).map(|(x, v)| v - mean.eval(x)));
                let alpha = chol.solve(&residual).as_slice().to_vec();
                let chol_l = chol.unpack();
                return Ok(Self { kernel, mean, noise_variance, standardization, inputs, targets, chol_l, alpha });
            }
        }
        Err(Error::Factorization { hyperparameters: pack_hyperparameters(&kernel, &mean) })
    }

    /// Model without data: predictions are the prior.
    pub fn prior(dim: usize, config: &GpConfig) -> Result<Self> {
        let kernel = KernelSpec::new(config.kernel, vec![1.0; dim], 1.0)?;
        Self::new(kernel, MeanSpec::zeros(config.mean, dim), Vec::new(), &[], Standardization::identity())
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn mean(&self) -> &MeanSpec {
        &self.mean
    }

    pub fn standardization(&self) -> Standardization {
        self.standardization
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    /// Latent posterior mean and standard deviation in standardized units.
    pub fn predict_standardized(&self, x: &[f64]) -> (f64, f64) {
        let n = self.inputs.len();
        let mut v: Vec<f64> = self
            .inputs
            .iter()
            .map(|xi| self.kernel.from_sq_dist(self.kernel.scaled_sq_dist(x, xi)))
            .collect();
        let mu = self.mean.eval(x) + v.iter().zip(&self.alpha).map(|(k, a)| k * a).sum::<f64>();
        // forward substitution L v = k, column oriented over column-major storage
        let l = self.chol_l.as_slice();
        for j in 0..n {
            let col = &l[j * n..(j + 1) * n];
            v[j] /= col[j];
            let vj = v[j];
            for i in j + 1..n {
                v[i] -= col[i] * vj;
            }
        }
        let var = self.kernel.signal_variance - v.iter().map(|t| t * t).sum::<f64>();
        (mu, var.max(0.0).sqrt())
    }

    /// Posterior mean and standard deviation at a unit-cube point, in raw units.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let (mu, sigma) = self.predict_standardized(x);
        (self.standardization.backward(mu), self.standardization.scale * sigma)
    }

    /// Log posterior of the fitted hyperparameters on the training data.
    pub fn log_posterior(&self, prior: &HyperpriorSpec) -> Result<(f64, Vec<f64>)> {
        log_posterior(&self.kernel, &self.mean, prior, &self.inputs, &self.targets)
    }
}

fn hyperparameter_bounds(dim: usize, mean: MeanKind) -> (Vec<f64>, Vec<f64>) {
    let m = mean.coefficient_count(dim);
    let mut lower = vec![LN_LENGTH_SCALE_BOUNDS.0; dim];
    let mut upper = vec![LN_LENGTH_SCALE_BOUNDS.1; dim];
    lower.push(LN_SIGNAL_VARIANCE_BOUNDS.0);
    upper.push(LN_SIGNAL_VARIANCE_BOUNDS.1);
    lower.extend(std::iter::repeat_n(-MEAN_COEFFICIENT_BOUND, m));
    upper.extend(std::iter::repeat_n(MEAN_COEFFICIENT_BOUND, m));
    (lower, upper)
}

fn random_hyperparameters<R: Rng + ?Sized>(dim: usize, config: &GpConfig, prior: &HyperpriorSpec, rng: &mut R) -> Vec<f64> {
    let mut p: Vec<f64> = (0..dim)
        .map(|_| prior.sample(rng).clamp(LN_LENGTH_SCALE_BOUNDS.0, LN_LENGTH_SCALE_BOUNDS.1))
        .collect();
    p.push(rng.random_range(0.1f64.ln()..10f64.ln()));
    for _ in 0..config.mean.coefficient_count(dim) {
        p.push(rng.random_range(-1.0..1.0));
    }
    p
}

/// Fits hyperparameters by maximum a posteriori: random draws from the
/// hyperprior, the best of which are refined by gradient ascent.
///
/// Outputs are robustly standardized before fitting. With no data the prior
/// model is returned.
pub fn fit<R: Rng + ?Sized>(
    dim: usize,
    inputs: &[Vec<f64>],
    y_raw: &[f64],
    config: &GpConfig,
    rng: &mut R,
) -> Result<GpModel> {
    fit_with(dim, inputs, y_raw, config, &FitOptions::default(), rng)
}

pub fn fit_with<R: Rng + ?Sized>(
    dim: usize,
    inputs: &[Vec<f64>],
    y_raw: &[f64],
    config: &GpConfig,
    options: &FitOptions,
    rng: &mut R,
) -> Result<GpModel> {
    if dim == 0 {
        return Err(Error::Parameter("dimension must be positive".into()));
    }
    if inputs.is_empty() {
        return GpModel::prior(dim, config);
    }
    if inputs.len() != y_raw.len() {
        return Err(Error::Parameter(format!("{} inputs but {} outputs", inputs.len(), y_raw.len())));
    }
    if y_raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parameter("outputs must be finite".into()));
    }
    if let Some(x) = inputs.iter().find(|x| x.len() != dim) {
        return Err(Error::Parameter(format!("input {x:?} does not have dimension {dim}")));
    }

    let prior = HyperpriorSpec::default_for(config.prior);
    let standardization = Standardization::robust(y_raw);
    let targets: Vec<f64> = y_raw.iter().map(|v| standardization.forward(*v)).collect();
    let noise_variance = JITTER_STD * JITTER_STD;
    let objective = |p: &[f64], with_gradient: bool| {
        let (kernel, mean) = unpack_hyperparameters(config.kernel, config.mean, dim, p);
        log_posterior_impl(&kernel, &mean, &prior, inputs, &targets, noise_variance, with_gradient)
    };

    let mut scored: Vec<(f64, Vec<f64>)> = (0..options.random_draws.max(1))
        .map(|_| {
            let p = random_hyperparameters(dim, config, &prior, rng);
            let v = objective(&p, false).map_or(f64::NEG_INFINITY, |(v, _)| v);
            (v, p)
        })
        .collect();
    // stable sort keeps draw order among ties, so the result is seed-determined
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));

    let (lower, upper) = hyperparameter_bounds(dim, config.mean);
    let ascent = AscentOptions { max_iterations: options.max_ascent_iterations, ..AscentOptions::default() };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for (v0, p0) in scored.iter().take(options.refined_draws) {
        let (p, v) = if v0.is_finite() {
            maximize(|p, with_gradient| objective(p, with_gradient), p0.clone(), &lower, &upper, &ascent)
        } else {
            (p0.clone(), *v0)
        };
        if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
            best = Some((v, p));
        }
    }
    let (best_value, best_p) = best.expect("at least one draw");
    let best_p = if best_value.is_finite() {
        best_p
    } else {
        // every refined draw failed to factorize; fall back to the best finite unrefined draw
        scored
            .iter()
            .find(|(v, _)| v.is_finite())
            .map(|(_, p)| p.clone())
            .ok_or_else(|| Error::Factorization { hyperparameters: best_p.clone() })?
    };
    let (kernel, mean) = unpack_hyperparameters(config.kernel, config.mean, dim, &best_p);
    GpModel::new(kernel, mean, inputs.to_vec(), y_raw, standardization)
}
