use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT_5: f64 = 2.236_067_977_499_79;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelKind {
    SquaredExponential,
    Matern52,
}

/// Stationary ARD kernel: one length scale per input dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub length_scales: Vec<f64>,
    pub signal_variance: f64,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, length_scales: Vec<f64>, signal_variance: f64) -> Result<Self> {
        let spec = Self { kind, length_scales, signal_variance };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.length_scales.is_empty() {
            return Err(Error::Parameter("kernel needs at least one length scale".into()));
        }
        if let Some(l) = self.length_scales.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::Parameter(format!("length scale {l} is not positive and finite")));
        }
        if !(self.signal_variance.is_finite() && self.signal_variance > 0.0) {
            return Err(Error::Parameter(format!(
                "signal variance {} is not positive and finite",
                self.signal_variance
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.length_scales.len()
    }

    /// Squared scaled distance `sum_i ((x_i - y_i) / l_i)^2`.
    #[inline]
    pub fn scaled_sq_dist(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .zip(&self.length_scales)
            .map(|((a, b), l)| {
                let t = (a - b) / l;
                t * t
            })
            .sum()
    }

    /// Kernel value as a function of the squared scaled distance.
    #[inline]
    pub fn from_sq_dist(&self, r2: f64) -> f64 {
        match self.kind {
            KernelKind::SquaredExponential => self.signal_variance * (-0.5 * r2).exp(),
            KernelKind::Matern52 => {
                let r = r2.sqrt();
                self.signal_variance * (1.0 + SQRT_5 * r + 5.0 / 3.0 * r2) * (-SQRT_5 * r).exp()
            }
        }
    }

    /// `(k, g)` with `dk / d ln l_i = g * ((x_i - y_i) / l_i)^2`.
    #[inline]
    pub(crate) fn value_and_scale_factor(&self, r2: f64) -> (f64, f64) {
        match self.kind {
            KernelKind::SquaredExponential => {
                let k = self.signal_variance * (-0.5 * r2).exp();
                (k, k)
            }
            KernelKind::Matern52 => {
                let r = r2.sqrt();
                let e = (-SQRT_5 * r).exp();
                let k = self.signal_variance * (1.0 + SQRT_5 * r + 5.0 / 3.0 * r2) * e;
                (k, self.signal_variance * 5.0 / 3.0 * (1.0 + SQRT_5 * r) * e)
            }
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.validate()?;
        if x.len() != self.dim() || y.len() != self.dim() {
            return Err(Error::Parameter(format!(
                "kernel of dimension {} evaluated on inputs of length {} and {}",
                self.dim(),
                x.len(),
                y.len()
            )));
        }
        Ok(self.from_sq_dist(self.scaled_sq_dist(x, y)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent scalar implementations of the two kernels.
    fn se_1d(dx: f64, l: f64, sf2: f64) -> f64 {
        sf2 * f64::exp(-(dx * dx) / (2.0 * l * l))
    }

    fn matern52_1d(dx: f64, l: f64, sf2: f64) -> f64 {
        let s = 5f64.sqrt() * dx.abs() / l;
        sf2 * (1.0 + s + s * s / 3.0) * f64::exp(-s)
    }

    #[test]
    fn unit_distance_values() {
        let se = KernelSpec::new(KernelKind::SquaredExponential, vec![1.0], 1.0).unwrap();
        let ma = KernelSpec::new(KernelKind::Matern52, vec![1.0], 1.0).unwrap();
        let k_se = se.eval(&[0.0], &[1.0]).unwrap();
        let k_ma = ma.eval(&[0.0], &[1.0]).unwrap();
        assert!((k_se - se_1d(1.0, 1.0, 1.0)).abs() < 1e-15);
        assert!((k_ma - matern52_1d(1.0, 1.0, 1.0)).abs() < 1e-15);
        assert!((k_se - 0.60653).abs() < 1e-5);
        assert!((k_ma - 0.52399).abs() < 1e-5);
    }

    #[test]
    fn zero_distance_gives_signal_variance_and_symmetry() {
        for kind in [KernelKind::SquaredExponential, KernelKind::Matern52] {
            let k = KernelSpec::new(kind, vec![0.3, 2.0, 0.7], 2.5).unwrap();
            let x = [0.1, 0.9, 0.4];
            let y = [0.6, 0.2, 0.5];
            assert_eq!(k.eval(&x, &x).unwrap(), 2.5);
            assert_eq!(k.eval(&x, &y).unwrap(), k.eval(&y, &x).unwrap());
        }
    }

    #[test]
    fn ard_matches_scalar_oracle_per_dimension() {
        let k = KernelSpec::new(KernelKind::Matern52, vec![0.5], 1.7).unwrap();
        for dx in [0.0, 0.1, 0.37, 1.2, 3.0] {
            assert!((k.eval(&[0.2], &[0.2 + dx]).unwrap() - matern52_1d(dx, 0.5, 1.7)).abs() < 1e-14);
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(KernelSpec::new(KernelKind::SquaredExponential, vec![0.0], 1.0).is_err());
        assert!(KernelSpec::new(KernelKind::SquaredExponential, vec![-1.0], 1.0).is_err());
        assert!(KernelSpec::new(KernelKind::Matern52, vec![1.0], 0.0).is_err());
        let k = KernelSpec::new(KernelKind::Matern52, vec![1.0, 1.0], 1.0).unwrap();
        assert!(k.eval(&[0.0], &[0.0]).is_err());
    }
}
