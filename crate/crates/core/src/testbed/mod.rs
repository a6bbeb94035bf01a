//! Crash-constrained test problems: synthetic families, a cart-pole
//! state-feedback tuning problem and the problem registry.

mod cartpole;
mod registry;
mod synthetic;

pub use cartpole::{
    cost as cartpole_cost, open_loop_cost, simulate, CartPole, CartPoleMode, CartPoleParams, Rollout,
    LQR_ANGLE_GAINS, LQR_POSITION_GAINS,
};
pub use registry::{ProblemSpec, Registry, RegistryEntry, BUILTIN_REGISTRY};
pub use synthetic::{CrashRegion, SyntheticBase, SyntheticProblem, SyntheticSpec};

/// Trapezoidal `int t |e(t)| dt` for samples `e_k = e(k dt)`. Empty input gives 0.
///
/// Panics if `dt` is not positive.
pub fn itae(errors: &[f64], dt: f64) -> f64 {
    assert!(dt > 0.0, "time step must be positive, got {dt}");
    errors
        .windows(2)
        .enumerate()
        .map(|(k, w)| 0.5 * dt * (k as f64 * dt * w[0].abs() + (k + 1) as f64 * dt * w[1].abs()))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Problem, Response};

    #[test]
    fn itae_reference_values() {
        assert_eq!(itae(&[], 0.1), 0.0);
        assert_eq!(itae(&[3.0], 0.1), 0.0);
        assert_eq!(itae(&[0.0; 100], 0.01), 0.0);
        // t |1| is linear, so the trapezoid rule is exact
        let ones = vec![1.0; 1001];
        assert!((itae(&ones, 0.01) - 50.0).abs() < 1e-9);
        let minus = vec![-1.0; 1001];
        assert_eq!(itae(&minus, 0.01), itae(&ones, 0.01));
    }

    #[test]
    fn itae_converges_under_refinement() {
        // int_0^5 t e^{-t} |cos 3t| dt on successively finer grids
        let series = |n: usize| -> (Vec<f64>, f64) {
            let dt = 5.0 / n as f64;
            ((0..=n).map(|k| {
                let t = k as f64 * dt;
                (-t).exp() * (3.0 * t).cos()
            }).collect(), dt)
        };
        let (a, da) = series(500);
        let (b, db) = series(1000);
        let (fa, fb) = (itae(&a, da), itae(&b, db));
        assert!(((fa - fb) / fb).abs() < 0.01);
    }

    fn d2() -> CartPole {
        Registry::builtin().unwrap().cartpole("cartpole-d2").unwrap()
    }

    #[test]
    fn lqr_gains_stabilize_and_zero_angle_gains_crash() {
        let p = d2();
        let Response::Success(j) = p.evaluate(&[LQR_ANGLE_GAINS.0, LQR_ANGLE_GAINS.1]).unwrap() else {
            panic!("LQR gains crashed")
        };
        assert!(j.is_finite() && j > 0.0);
        assert_eq!(p.evaluate(&[0.0, 0.0]).unwrap(), Response::Crash { fallback: Some(p.fallback()) });
    }

    #[test]
    fn open_loop_fallback_matches_closed_form() {
        // cart never moves: 0.05 * sum_r r T^2 / 2
        let params = CartPoleParams::default();
        let expected = 0.05 * (0.5 + 1.0) * 10.0f64.powi(2) / 2.0;
        assert!((open_loop_cost(&params) - expected).abs() < 1e-9);
        assert_eq!(d2().fallback(), open_loop_cost(&params));
    }

    #[test]
    fn cartpole_is_deterministic() {
        let p = d2();
        let first = p.evaluate(&[-40.0, -9.0]).unwrap();
        for _ in 0..20 {
            let again = p.evaluate(&[-40.0, -9.0]).unwrap();
            match (first, again) {
                (Response::Success(a), Response::Success(b)) => assert_eq!(a.to_bits(), b.to_bits()),
                (a, b) => assert_eq!(a, b),
            }
        }
    }
}
