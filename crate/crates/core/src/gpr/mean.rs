use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeanKind {
    Constant,
    /// Axis-aligned quadratic without cross terms.
    Quadratic,
}

impl MeanKind {
    pub fn coefficient_count(self, dim: usize) -> usize {
        match self {
            MeanKind::Constant => 1,
            MeanKind::Quadratic => 2 * dim + 1,
        }
    }
}

/// Prior mean. Coefficients are laid out as `[c, a_1..a_d, b_1..b_d]`
/// for the quadratic form `c + sum a_i x_i + sum b_i x_i^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanSpec {
    pub kind: MeanKind,
    pub coefficients: Vec<f64>,
}

impl MeanSpec {
    pub fn constant(c: f64) -> Self {
        Self { kind: MeanKind::Constant, coefficients: vec![c] }
    }

    pub fn quadratic(c: f64, linear: &[f64], square: &[f64]) -> Result<Self> {
        if linear.len() != square.len() {
            return Err(Error::Parameter("linear and square term counts differ".into()));
        }
        let mut coefficients = Vec::with_capacity(2 * linear.len() + 1);
        coefficients.push(c);
        coefficients.extend_from_slice(linear);
        coefficients.extend_from_slice(square);
        Ok(Self { kind: MeanKind::Quadratic, coefficients })
    }

    pub fn zeros(kind: MeanKind, dim: usize) -> Self {
        Self { kind, coefficients: vec![0.0; kind.coefficient_count(dim)] }
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        let expected = self.kind.coefficient_count(dim);
        if self.coefficients.len() != expected {
            return Err(Error::Parameter(format!(
                "{:?} mean in dimension {dim} needs {expected} coefficients, got {}",
                self.kind,
                self.coefficients.len()
            )));
        }
        Ok(())
    }

    /// Basis function values at `x`; the mean is their dot product with the coefficients.
    pub fn basis(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.push(1.0);
        if self.kind == MeanKind::Quadratic {
            out.extend_from_slice(x);
            out.extend(x.iter().map(|v| v * v));
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        let c = &self.coefficients;
        match self.kind {
            MeanKind::Constant => c[0],
            MeanKind::Quadratic => {
                let d = x.len();
                c[0] + x
                    .iter()
                    .enumerate()
                    .map(|(i, v)| c[1 + i] * v + c[1 + d + i] * v * v)
                    .sum::<f64>()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(MeanSpec::constant(0.3).eval(&[0.1, 0.9]), 0.3);
        let q = MeanSpec::quadratic(0.0, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_eq!(q.eval(&[0.5, 0.5]), 0.5);
        let z = MeanSpec::zeros(MeanKind::Quadratic, 3);
        assert_eq!(z.coefficients.len(), 7);
        assert_eq!(z.eval(&[0.2, 0.4, 0.9]), 0.0);
    }

    #[test]
    fn basis_dot_coefficients_is_eval() {
        let q = MeanSpec::quadratic(0.5, &[1.0, -2.0], &[0.25, 3.0]).unwrap();
        let x = [0.3, 0.8];
        let mut basis = Vec::new();
        q.basis(&x, &mut basis);
        let dot: f64 = basis.iter().zip(&q.coefficients).map(|(a, b)| a * b).sum();
        assert!((dot - q.eval(&x)).abs() < 1e-15);
    }

    #[test]
    fn coefficient_count_checked() {
        let q = MeanSpec::quadratic(0.0, &[0.0], &[0.0]).unwrap();
        assert!(q.check_dim(1).is_ok());
        assert!(q.check_dim(2).is_err());
        assert!(MeanSpec::quadratic(0.0, &[0.0], &[]).is_err());
    }
}
