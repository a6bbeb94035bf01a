use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PriorKind {
    SmoothBox,
    Gamma,
}

/// Prior over each kernel length scale, expressed as a density over
/// `u = ln l` (the parameterization the fit works in).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum HyperpriorSpec {
    /// Uniform on `[lower, upper]` in `ln l`, with logistic edges of the given width.
    SmoothBox { lower: f64, upper: f64, width: f64 },
    /// Gamma(shape, scale) on `l`, carried over to `ln l` with its Jacobian.
    Gamma { shape: f64, scale: f64 },
}

/// `ln sigmoid(t)` without overflow.
fn ln_sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        -(-t).exp().ln_1p()
    } else {
        t - t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl HyperpriorSpec {
    pub fn default_for(kind: PriorKind) -> Self {
        match kind {
            PriorKind::SmoothBox => HyperpriorSpec::SmoothBox {
                lower: 0.01f64.ln(),
                upper: 10f64.ln(),
                width: 0.1,
            },
            PriorKind::Gamma => HyperpriorSpec::Gamma { shape: 2.0, scale: 0.5 },
        }
    }

    pub fn kind(&self) -> PriorKind {
        match self {
            HyperpriorSpec::SmoothBox { .. } => PriorKind::SmoothBox,
            HyperpriorSpec::Gamma { .. } => PriorKind::Gamma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            HyperpriorSpec::SmoothBox { lower, upper, width } => {
                if !(lower < upper && width > 0.0 && width.is_finite()) {
                    return Err(Error::Parameter(format!(
                        "smooth box prior needs lower < upper and width > 0, got [{lower}, {upper}] / {width}"
                    )));
                }
            }
            HyperpriorSpec::Gamma { shape, scale } => {
                if !(shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()) {
                    return Err(Error::Parameter(format!(
                        "gamma prior needs positive shape and scale, got {shape}, {scale}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Log density of one log length scale and its derivative.
    pub fn log_density(&self, u: f64) -> (f64, f64) {
        match *self {
            HyperpriorSpec::SmoothBox { lower, upper, width } => {
                let a = (u - lower) / width;
                let b = (upper - u) / width;
                let value = ln_sigmoid(a) + ln_sigmoid(b) - (upper - lower).ln();
                let grad = (sigmoid(-a) - sigmoid(-b)) / width;
                (value, grad)
            }
            HyperpriorSpec::Gamma { shape, scale } => {
                let l = u.exp();
                let value = shape * u - l / scale - libm::lgamma(shape) - shape * scale.ln();
                (value, shape - l / scale)
            }
        }
    }

    /// Draws one log length scale from the prior (box body only for `SmoothBox`).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            HyperpriorSpec::SmoothBox { lower, upper, .. } => rng.random_range(lower..upper),
            HyperpriorSpec::Gamma { shape, scale } => {
                let g = Gamma::new(shape, scale).expect("validated gamma parameters");
                g.sample(rng).max(1e-6).ln()
            }
        }
    }
}
