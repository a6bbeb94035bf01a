//! Synthetic crash-constrained problems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{Domain, Problem, Response};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyntheticBase {
    /// `sum (theta_i - c_i)^2`.
    SphereCrash,
    /// `sum 100 (theta_{i+1} - theta_i^2)^2 + (1 - theta_i)^2`.
    RosenbrockCrash,
    /// Sphere plus `amplitude * sin(frequency * sum theta_i)`.
    NoisyBowl,
}

/// Region of the box where the simulation crashes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrashRegion {
    /// `normal . theta > offset`.
    HalfSpace { normal: Vec<f64>, offset: f64 },
    /// `|theta - center| < radius`.
    Ball { center: Vec<f64>, radius: f64 },
}

impl CrashRegion {
    /// Euclidean distance to the region border, positive inside.
    pub fn signed_distance(&self, theta: &[f64]) -> f64 {
        match self {
            CrashRegion::HalfSpace { normal, offset } => {
                let norm = normal.iter().map(|n| n * n).sum::<f64>().sqrt();
                (normal.iter().zip(theta).map(|(n, t)| n * t).sum::<f64>() - offset) / norm
            }
            CrashRegion::Ball { center, radius } => {
                radius - center.iter().zip(theta).map(|(c, t)| (t - c) * (t - c)).sum::<f64>().sqrt()
            }
        }
    }

    fn dim(&self) -> usize {
        match self {
            CrashRegion::HalfSpace { normal, .. } => normal.len(),
            CrashRegion::Ball { center, .. } => center.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub base: SyntheticBase,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Bowl center; unused by the Rosenbrock base.
    #[serde(default)]
    pub center: Vec<f64>,
    pub crash: CrashRegion,
    /// Feasible band along the crash border where `ledge_height` is added.
    #[serde(default)]
    pub ledge_width: f64,
    #[serde(default)]
    pub ledge_height: f64,
    #[serde(default)]
    pub noise_amplitude: f64,
    #[serde(default)]
    pub noise_frequency: f64,
    /// Fixed penalty reported for crashed queries.
    pub fallback: f64,
}

impl SyntheticSpec {
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        Domain::new(self.lower.clone(), self.upper.clone())?;
        if self.base != SyntheticBase::RosenbrockCrash && self.center.len() != dim {
            return Err(Error::Parameter(format!("center has {} entries, expected {dim}", self.center.len())));
        }
        if self.base == SyntheticBase::RosenbrockCrash && dim < 2 {
            return Err(Error::Parameter("Rosenbrock needs at least two dimensions".into()));
        }
        if self.crash.dim() != dim {
            return Err(Error::Parameter("crash region dimension mismatch".into()));
        }
        match &self.crash {
            CrashRegion::HalfSpace { normal, offset } => {
                if !offset.is_finite() || normal.iter().all(|n| *n == 0.0) || normal.iter().any(|n| !n.is_finite()) {
                    return Err(Error::Parameter("invalid half-space".into()));
                }
            }
            CrashRegion::Ball { radius, .. } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::Parameter("ball radius must be positive".into()));
                }
            }
        }
        for (name, v) in [
            ("ledge width", self.ledge_width),
            ("ledge height", self.ledge_height),
            ("noise amplitude", self.noise_amplitude),
            ("noise frequency", self.noise_frequency),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !self.fallback.is_finite() {
            return Err(Error::Parameter("fallback must be finite".into()));
        }
        Ok(())
    }

    /// Objective ignoring the crash region and the ledge.
    pub fn smooth_objective(&self, theta: &[f64]) -> f64 {
        let sphere = || theta.iter().zip(&self.center).map(|(t, c)| (t - c) * (t - c)).sum::<f64>();
        match self.base {
            SyntheticBase::SphereCrash => sphere(),
            SyntheticBase::NoisyBowl => {
                sphere() + self.noise_amplitude * (self.noise_frequency * theta.iter().sum::<f64>()).sin()
            }
            SyntheticBase::RosenbrockCrash => theta
                .windows(2)
                .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
                .sum(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticProblem {
    id: String,
    spec: SyntheticSpec,
    domain: Domain,
    known_best: Option<f64>,
}

impl SyntheticProblem {
    pub fn new(id: impl Into<String>, spec: SyntheticSpec, known_best: Option<f64>) -> Result<Self> {
        spec.validate()?;
        let domain = Domain::new(spec.lower.clone(), spec.upper.clone())?;
        Ok(Self { id: id.into(), spec, domain, known_best })
    }

    pub fn spec(&self) -> &SyntheticSpec {
        &self.spec
    }

    pub fn crashes_at(&self, theta: &[f64]) -> bool {
        self.spec.crash.signed_distance(theta) > 0.0
    }
}

impl Problem for SyntheticProblem {
    fn id(&self) -> &str {
        &self.id
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn evaluate(&self, theta: &[f64]) -> std::result::Result<Response, String> {
        if theta.len() != self.domain.dim() {
            return Err(format!("expected {} parameters, got {}", self.domain.dim(), theta.len()));
        }
        let depth = self.spec.crash.signed_distance(theta);
        if depth > 0.0 {
            return Ok(Response::Crash { fallback: Some(self.spec.fallback) });
        }
        let mut value = self.spec.smooth_objective(theta);
        if -depth < self.spec.ledge_width {
            value += self.spec.ledge_height;
        }
        Ok(Response::Success(value))
    }

    fn known_best(&self) -> Option<f64> {
        self.known_best
    }
}
