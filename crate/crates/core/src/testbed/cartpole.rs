//! Cart-pole under full state feedback, tuned for two reference steps of the
//! cart position.
//!
//! State `[x, x_dot, phi, phi_dot]` with `phi = 0` upright and the control
//! law `u = -(k_x (x - x_ref) + k_xdot x_dot + k_phi phi + k_phidot phi_dot)`.
//! The run crashes as soon as `|phi|` exceeds 90 degrees.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::itae;
use crate::error::{Error, Result};
use crate::problem::{Domain, Problem, Response};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartPoleParams {
    pub cart_mass: f64,
    pub pole_mass: f64,
    pub half_length: f64,
    pub gravity: f64,
    /// Simulated time per reference step (s).
    pub horizon: f64,
    pub dt: f64,
    /// Cart position set points, each simulated from rest at the origin.
    pub references: [f64; 2],
}

impl Default for CartPoleParams {
    fn default() -> Self {
        Self {
            cart_mass: 1.0,
            pole_mass: 0.1,
            half_length: 0.5,
            gravity: 9.81,
            horizon: 10.0,
            dt: 1e-3,
            references: [0.5, 1.0],
        }
    }
}

impl CartPoleParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.cart_mass, self.pole_mass, self.half_length, self.gravity, self.horizon, self.dt];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Parameter("cart-pole parameters must be positive".into()));
        }
        if self.dt * 100.0 > self.horizon {
            return Err(Error::Parameter(format!("step {} too coarse for horizon {}", self.dt, self.horizon)));
        }
        if self.references.iter().any(|r| !r.is_finite()) {
            return Err(Error::Parameter("references must be finite".into()));
        }
        Ok(())
    }

    fn derivative(&self, s: [f64; 4], u: f64) -> [f64; 4] {
        let [_, xd, p, pd] = s;
        let total = self.cart_mass + self.pole_mass;
        let ml = self.pole_mass * self.half_length;
        let (sp, cp) = p.sin_cos();
        let tmp = (u + ml * pd * pd * sp) / total;
        let pdd = (self.gravity * sp - cp * tmp) / (self.half_length * (4.0 / 3.0 - self.pole_mass * cp * cp / total));
        let xdd = tmp - ml * pdd * cp / total;
        [xd, xdd, pd, pdd]
    }
}

/// Outcome of one reference step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rollout {
    pub crashed: bool,
    pub itae_angle: f64,
    pub itae_position: f64,
}

/// Simulates one step to `x_ref` with RK4 under gains `k`.
pub fn simulate(params: &CartPoleParams, k: [f64; 4], x_ref: f64) -> Rollout {
    let steps = (params.horizon / params.dt).round() as usize;
    let control = |s: [f64; 4]| -(k[0] * (s[0] - x_ref) + k[1] * s[1] + k[2] * s[2] + k[3] * s[3]);
    let f = |s: [f64; 4]| params.derivative(s, control(s));
    let axpy = |s: [f64; 4], h: f64, d: [f64; 4]| [s[0] + h * d[0], s[1] + h * d[1], s[2] + h * d[2], s[3] + h * d[3]];

    let mut angle = Vec::with_capacity(steps + 1);
    let mut position = Vec::with_capacity(steps + 1);
    let mut s = [0.0; 4];
    angle.push(0.0);
    position.push(x_ref);
    let dt = params.dt;
    for _ in 0..steps {
        let k1 = f(s);
        let k2 = f(axpy(s, 0.5 * dt, k1));
        let k3 = f(axpy(s, 0.5 * dt, k2));
        let k4 = f(axpy(s, dt, k3));
        for i in 0..4 {
            s[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if !(s[2].abs() <= FRAC_PI_2) || s.iter().any(|v| !v.is_finite()) {
            return Rollout { crashed: true, itae_angle: f64::NAN, itae_position: f64::NAN };
        }
        angle.push(s[2]);
        position.push(x_ref - s[0]);
    }
    Rollout { crashed: false, itae_angle: itae(&angle, dt), itae_position: itae(&position, dt) }
}

/// Weighted tracking cost over both reference steps, `None` on a crash.
pub fn cost(params: &CartPoleParams, k: [f64; 4]) -> Option<f64> {
    let mut total = 0.0;
    for &r in &params.references {
        let run = simulate(params, k, r);
        if run.crashed {
            return None;
        }
        total += 0.45 * run.itae_angle + 0.05 * run.itae_position;
    }
    total.is_finite().then_some(total)
}

/// Cost with the controller switched off: the pole stays balanced at rest
/// while the cart never moves toward its set points.
pub fn open_loop_cost(params: &CartPoleParams) -> f64 {
    cost(params, [0.0; 4]).expect("an unforced upright pole at rest stays upright")
}

/// Which gains are tuned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum CartPoleMode {
    /// Tune `[k_phi, k_phidot]`; position gains fixed.
    D2 { k_x: f64, k_xdot: f64 },
    /// Tune `[k_x, k_xdot, k_phi, k_phidot]`.
    D4,
}

/// Position gains of an LQR design on the linearization about the upright
/// equilibrium with the default parameters, `Q = diag(1, 1, 10, 1)`, `R = 1`.
pub const LQR_POSITION_GAINS: (f64, f64) = (-1.0, -2.315_624_16);
/// Angle gains of the same LQR design.
pub const LQR_ANGLE_GAINS: (f64, f64) = (-32.187, -8.216);

#[derive(Debug, Clone)]
pub struct CartPole {
    id: String,
    params: CartPoleParams,
    mode: CartPoleMode,
    domain: Domain,
    fallback: f64,
    known_best: Option<f64>,
}

impl CartPole {
    pub fn new(
        id: impl Into<String>,
        params: CartPoleParams,
        mode: CartPoleMode,
        domain: Domain,
        known_best: Option<f64>,
    ) -> Result<Self> {
        params.validate()?;
        let dim = match mode {
            CartPoleMode::D2 { .. } => 2,
            CartPoleMode::D4 => 4,
        };
        if domain.dim() != dim {
            return Err(Error::Parameter(format!("cart-pole mode needs a {dim}-dimensional box")));
        }
        let fallback = open_loop_cost(&params);
        Ok(Self { id: id.into(), params, mode, domain, fallback, known_best })
    }

    pub fn params(&self) -> &CartPoleParams {
        &self.params
    }

    pub fn mode(&self) -> CartPoleMode {
        self.mode
    }

    /// Value reported for crashed runs.
    pub fn fallback(&self) -> f64 {
        self.fallback
    }

    pub fn gains(&self, theta: &[f64]) -> [f64; 4] {
        match self.mode {
            CartPoleMode::D2 { k_x, k_xdot } => [k_x, k_xdot, theta[0], theta[1]],
            CartPoleMode::D4 => [theta[0], theta[1], theta[2], theta[3]],
        }
    }
}

impl Problem for CartPole {
    fn id(&self) -> &str {
        &self.id
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn evaluate(&self, theta: &[f64]) -> std::result::Result<Response, String> {
        if theta.len() != self.domain.dim() {
            return Err(format!("expected {} gains, got {}", self.domain.dim(), theta.len()));
        }
        Ok(match cost(&self.params, self.gains(theta)) {
            Some(j) => Response::Success(j),
            None => Response::Crash { fallback: Some(self.fallback) },
        })
    }

    fn known_best(&self) -> Option<f64> {
        self.known_best
    }
}
