//! Standard normal helpers.

use libm::erfc;

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z - LN_SQRT_2PI).exp()
}

pub fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// `ln Phi(z)`, accurate in the far left tail.
pub fn norm_log_cdf(z: f64) -> f64 {
    if z > -30.0 {
        norm_cdf(z).ln()
    } else {
        let z2 = z * z;
        -0.5 * z2 - (-z).ln() - LN_SQRT_2PI + (1.0 - 1.0 / z2 + 3.0 / (z2 * z2)).ln()
    }
}

/// `phi(z) / Phi(z)`, accurate in the far left tail.
pub fn inverse_mills(z: f64) -> f64 {
    if z > -30.0 {
        norm_pdf(z) / norm_cdf(z)
    } else {
        let z2 = z * z;
        -z / (1.0 - 1.0 / z2 + 3.0 / (z2 * z2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert!((norm_pdf(0.0) - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert!((norm_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((norm_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-11);
        assert!((norm_log_cdf(0.0) + std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn tails_are_continuous() {
        for (a, b) in [(-29.999_999, -30.000_001)] {
            assert!((norm_log_cdf(a) - norm_log_cdf(b)).abs() < 1e-3);
            assert!((inverse_mills(a) - inverse_mills(b)).abs() < 1e-3);
        }
        assert!(norm_log_cdf(-100.0).is_finite());
        assert!((inverse_mills(-100.0) - 100.0).abs() < 0.02);
    }
}
