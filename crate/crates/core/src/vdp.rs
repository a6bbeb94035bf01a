//! Virtual data points for crashed evaluations.
//!
//! A GP fitted on the successful evaluations predicts each crashed input; the
//! crashed point then enters the training data with the pessimistic value
//! `min(max(mu, J_min) + gamma * sigma, J_max)`, where `J_min` and `J_max` are
//! the extreme successful objectives. Values are recomputed from scratch on
//! every call.

use rand::Rng;

use crate::error::{Error, Result};
use crate::gpr::{fit_with, FitOptions, GpConfig};
use crate::problem::{Domain, Evaluation};

/// Pessimism weight on the predictive standard deviation.
pub const DEFAULT_GAMMA: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Observed,
    Virtual,
}

/// Training data with crashed inputs replaced by virtual values.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedDataset {
    /// Unit-cube inputs in evaluation order.
    pub inputs: Vec<Vec<f64>>,
    /// Raw objectives for observed points, virtual values otherwise.
    pub values: Vec<f64>,
    pub origins: Vec<Origin>,
    /// Predictive standard deviation used for each virtual value.
    pub pessimism: Vec<Option<f64>>,
    pub j_min: f64,
    pub j_max: f64,
}

impl AugmentedDataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn virtual_count(&self) -> usize {
        self.origins.iter().filter(|o| **o == Origin::Virtual).count()
    }
}

/// Pessimistic value for a crashed point predicted at `(mu, sigma)`.
pub fn virtual_value(mu: f64, sigma: f64, gamma: f64, j_min: f64, j_max: f64) -> f64 {
    (mu.max(j_min) + gamma * sigma).min(j_max)
}

/// Builds the augmented training set for the history `evaluations`.
///
/// Fails with [`Error::NoFeasibleData`] when nothing succeeded.
pub fn add_virtual_data<R: Rng + ?Sized>(
    evaluations: &[Evaluation],
    domain: &Domain,
    config: &GpConfig,
    gamma: f64,
    rng: &mut R,
) -> Result<AugmentedDataset> {
    add_virtual_data_with(evaluations, domain, config, gamma, &FitOptions::default(), rng)
}

pub fn add_virtual_data_with<R: Rng + ?Sized>(
    evaluations: &[Evaluation],
    domain: &Domain,
    config: &GpConfig,
    gamma: f64,
    options: &FitOptions,
    rng: &mut R,
) -> Result<AugmentedDataset> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Parameter(format!("gamma must be positive, got {gamma}")));
    }
    let mut inputs = Vec::with_capacity(evaluations.len());
    for e in evaluations {
        inputs.push(domain.normalize(&e.theta)?);
    }
    let successes: Vec<(usize, f64)> =
        evaluations.iter().enumerate().filter_map(|(i, e)| e.value().map(|v| (i, v))).collect();
    if successes.is_empty() {
        return Err(Error::NoFeasibleData);
    }
    let j_min = successes.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let j_max = successes.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);

    let mut values = vec![0.0; evaluations.len()];
    let mut origins = vec![Origin::Observed; evaluations.len()];
    let mut pessimism = vec![None; evaluations.len()];
    for &(i, v) in &successes {
        values[i] = v;
    }

    if successes.len() < evaluations.len() {
        let x: Vec<Vec<f64>> = successes.iter().map(|&(i, _)| inputs[i].clone()).collect();
        let y: Vec<f64> = successes.iter().map(|s| s.1).collect();
        let model = fit_with(domain.dim(), &x, &y, config, options, rng)?;
        for (i, e) in evaluations.iter().enumerate() {
            if e.value().is_none() {
                let (mu, sigma) = model.predict(&inputs[i]);
                values[i] = virtual_value(mu, sigma, gamma, j_min, j_max);
                origins[i] = Origin::Virtual;
                pessimism[i] = Some(sigma);
            }
        }
    }
    Ok(AugmentedDataset { inputs, values, origins, pessimism, j_min, j_max })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::gpr::{fit, GpModel};

    #[test]
    fn hand_executed_examples() {
        assert!((virtual_value(0.5, 0.1, 3.0, 1.0, 5.0) - 1.3).abs() < 1e-15);
        assert_eq!(virtual_value(10.0, 2.0, 3.0, 1.0, 5.0), 5.0);
        assert_eq!(virtual_value(2.0, 0.5, 3.0, 1.0, 5.0), 3.5);
    }

    fn fixture(crash_at: &[f64]) -> Vec<Evaluation> {
        let mut evals: Vec<Evaluation> =
            [0.05, 0.2, 0.4, 0.6].iter().map(|t| Evaluation::success(vec![*t], (t - 0.7f64).powi(2))).collect();
        evals.extend(crash_at.iter().map(|t| Evaluation::crash(vec![*t], Some(1.0))));
        evals
    }

    #[test]
    fn without_crashes_the_data_is_unchanged() {
        let evals = fixture(&[]);
        let domain = Domain::unit(1).unwrap();
        let data = add_virtual_data(&evals, &domain, &GpConfig::default(), 3.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(data.virtual_count(), 0);
        assert_eq!(data.values, evals.iter().map(|e| e.objective.unwrap()).collect::<Vec<_>>());
        assert_eq!(data.inputs, evals.iter().map(|e| e.theta.clone()).collect::<Vec<_>>());
    }

    #[test]
    fn virtual_values_respect_bounds_and_follow_the_inner_model() {
        let evals = fixture(&[0.9, 0.97]);
        let domain = Domain::unit(1).unwrap();
        let config = GpConfig::default();
        let data = add_virtual_data(&evals, &domain, &config, 3.0, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(data.virtual_count(), 2);
        assert_eq!(data.origins[..4], [Origin::Observed; 4]);

        // same inner fit, recomputed independently
        let x: Vec<Vec<f64>> = evals[..4].iter().map(|e| e.theta.clone()).collect();
        let y: Vec<f64> = evals[..4].iter().map(|e| e.objective.unwrap()).collect();
        let model: GpModel = fit(1, &x, &y, &config, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        for i in 4..6 {
            let (mu, sigma) = model.predict(&evals[i].theta);
            assert_eq!(data.values[i], virtual_value(mu, sigma, 3.0, data.j_min, data.j_max));
            let s = data.pessimism[i].unwrap();
            assert!(data.values[i] <= data.j_max);
            if data.j_min + 3.0 * s <= data.j_max {
                assert!(data.values[i] >= data.j_min + 3.0 * s);
            } else {
                assert_eq!(data.values[i], data.j_max);
            }
            assert!(data.values[i] > data.j_min);
        }
    }

    #[test]
    fn augmentation_is_reproducible() {
        let evals = fixture(&[0.85, 0.92, 0.99]);
        let domain = Domain::unit(1).unwrap();
        let a = add_virtual_data(&evals, &domain, &GpConfig::default(), 3.0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = add_virtual_data(&evals, &domain, &GpConfig::default(), 3.0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn all_crashed_signals_no_feasible_data() {
        let evals = vec![Evaluation::crash(vec![0.1], None), Evaluation::crash(vec![0.2], Some(3.0))];
        let domain = Domain::unit(1).unwrap();
        let r = add_virtual_data(&evals, &domain, &GpConfig::default(), 3.0, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(r, Err(Error::NoFeasibleData));
    }

    #[test]
    fn inputs_are_normalized_with_the_domain() {
        let domain = Domain::new(vec![-10.0], vec![10.0]).unwrap();
        let evals = vec![Evaluation::success(vec![0.0], 1.0), Evaluation::success(vec![10.0], 2.0), Evaluation::crash(vec![-10.0], None)];
        let data = add_virtual_data(&evals, &domain, &GpConfig::default(), 3.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(data.inputs, vec![vec![0.5], vec![1.0], vec![0.0]]);
        let outside = vec![Evaluation::success(vec![11.0], 1.0)];
        assert!(add_virtual_data(&outside, &domain, &GpConfig::default(), 3.0, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}
