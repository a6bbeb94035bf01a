use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

/// Gauss-Jordan inverse with partial pivoting.
fn invert(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        m.swap(c, p);
        let pivot = m[c][c];
        m[c].iter_mut().for_each(|v| *v /= pivot);
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                if f != 0.0 {
                    let pivot_row = m[c].clone();
                    m[r].iter_mut().zip(&pivot_row).for_each(|(v, p)| *v -= f * p);
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Posterior from the textbook formulas with an explicit inverse.
fn oracle_predict(kernel: &KernelSpec, mean: &MeanSpec, xs: &[Vec<f64>], y_std: &[f64], s: Standardization, x: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let noise = JITTER_STD * JITTER_STD;
    let k: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| kernel.eval(&xs[i], &xs[j]).unwrap() + if i == j { noise } else { 0.0 }).collect())
        .collect();
    let k_inv = invert(&k);
    let ks: Vec<f64> = xs.iter().map(|xi| kernel.eval(x, xi).unwrap()).collect();
    let r: Vec<f64> = xs.iter().zip(y_std).map(|(xi, v)| v - mean.eval(xi)).collect();
    // K^-1 b through the explicit inverse, polished by two rounds of residual correction
    let solve = |b: &[f64]| {
        let apply = |m: &[Vec<f64>], v: &[f64]| -> Vec<f64> {
            m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
        };
        let mut z = apply(&k_inv, b);
        for _ in 0..2 {
            let kz = apply(&k, &z);
            let res: Vec<f64> = b.iter().zip(&kz).map(|(a, c)| a - c).collect();
            let dz = apply(&k_inv, &res);
            z.iter_mut().zip(&dz).for_each(|(v, d)| *v += d);
        }
        z
    };
    let alpha = solve(&r);
    let w = solve(&ks);
    let mu = mean.eval(x) + ks.iter().zip(&alpha).map(|(a, b)| a * b).sum::<f64>();
    let quad: f64 = ks.iter().zip(&w).map(|(a, b)| a * b).sum();
    let var = (kernel.signal_variance - quad).max(0.0);
    (s.backward(mu), s.scale * var.sqrt())
}

fn random_instance(rng: &mut ChaCha8Rng, n: usize, d: usize, kind: KernelKind, mean_kind: MeanKind) -> (KernelSpec, MeanSpec, Vec<Vec<f64>>, Vec<f64>) {
    let ls: Vec<f64> = (0..d).map(|_| rng.random_range(0.1f64.ln()..0.5f64.ln()).exp() * (d as f64).sqrt()).collect();
    let kernel = KernelSpec::new(kind, ls, rng.random_range(0.5..2.0)).unwrap();
    let coeffs: Vec<f64> = (0..mean_kind.coefficient_count(d)).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mean = MeanSpec { kind: mean_kind, coefficients: coeffs };
    let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect();
    let y: Vec<f64> = xs.iter().map(|x| x.iter().map(|v| (3.0 * v).sin()).sum::<f64>() * 4.0 + 7.0).collect();
    (kernel, mean, xs, y)
}

#[test]
fn prediction_matches_explicit_inverse_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for t in 0..40 {
        let d = 1 + t % 5;
        let n = 1 + rng.random_range(0..20);
        let kind = if t % 2 == 0 { KernelKind::SquaredExponential } else { KernelKind::Matern52 };
        let mk = if t % 4 < 2 { MeanKind::Constant } else { MeanKind::Quadratic };
        let (kernel, mean, xs, y) = random_instance(&mut rng, n, d, kind, mk);
        let s = Standardization::robust(&y);
        let model = GpModel::new(kernel.clone(), mean.clone(), xs.clone(), &y, s).unwrap();
        let y_std: Vec<f64> = y.iter().map(|v| s.forward(*v)).collect();
        let prior_sd = s.scale * kernel.signal_variance.sqrt();
        for _ in 0..5 {
            let x: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            let (mu, sigma) = model.predict(&x);
            let (mu_o, sigma_o) = oracle_predict(&kernel, &mean, &xs, &y_std, s, &x);
            assert!((mu - mu_o).abs() <= 1e-8 * mu_o.abs().max(prior_sd), "mu {mu} vs {mu_o}");
            assert!((sigma - sigma_o).abs() <= 1e-8 * prior_sd, "sigma {sigma} vs {sigma_o}");
        }
    }
}

#[test]
fn prior_prediction_without_data() {
    let config = GpConfig { kernel: KernelKind::Matern52, mean: MeanKind::Quadratic, prior: PriorKind::Gamma };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let model = fit(3, &[], &[], &config, &mut rng).unwrap();
    assert!(model.is_empty());
    let (mu, sigma) = model.predict(&[0.2, 0.5, 0.9]);
    assert_eq!(mu, 0.0);
    let expected = (model.kernel().signal_variance + JITTER_STD * JITTER_STD).sqrt();
    assert!((sigma - expected).abs() < 1e-8 * expected);
}

#[test]
fn near_interpolation_at_training_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let xs: Vec<Vec<f64>> = (0..8).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
    let y: Vec<f64> = xs.iter().map(|x| 10.0 * (x[0] - 0.3).powi(2) + 3.0 * x[1]).collect();
    let model = fit(2, &xs, &y, &GpConfig::default(), &mut rng).unwrap();
    let scale = model.standardization().scale;
    for (x, v) in xs.iter().zip(&y) {
        let (mu, sigma) = model.predict(x);
        assert!(sigma <= JITTER_STD * scale * 1.01, "sigma {sigma}");
        assert!((mu - v).abs() < 1e-3 * scale, "mu {mu} vs {v}");
    }
}

#[test]
fn single_point_log_likelihood_closed_form() {
    for kind in [KernelKind::SquaredExponential, KernelKind::Matern52] {
        let kernel = KernelSpec::new(kind, vec![0.4, 0.7], 1.3).unwrap();
        let y = 0.8;
        let mean = MeanSpec::constant(y);
        let prior = HyperpriorSpec::default_for(PriorKind::SmoothBox);
        let (value, _) = log_posterior(&kernel, &mean, &prior, &[vec![0.1, 0.2]], &[y]).unwrap();
        let log_prior: f64 = kernel.length_scales.iter().map(|l| prior.log_density(l.ln()).0).sum();
        let expected = -0.5 * (2.0 * std::f64::consts::PI * (1.3 + JITTER_STD * JITTER_STD)).ln();
        assert!((value - log_prior - expected).abs() < 1e-12);
    }
}

fn max_relative_gradient_error(rng: &mut ChaCha8Rng, kind: KernelKind, mk: MeanKind, prior: PriorKind) -> f64 {
    let (kernel, mean, xs, y) = random_instance(rng, 8, 2, kind, mk);
    let prior = HyperpriorSpec::default_for(prior);
    let y: Vec<f64> = y.iter().map(|v| (v - 7.0) / 4.0).collect();
    let p = pack_hyperparameters(&kernel, &mean);
    let (_, grad) = log_posterior(&kernel, &mean, &prior, &xs, &y).unwrap();
    let f = |p: &[f64]| {
        let (k, m) = unpack_hyperparameters(kind, mk, 2, p);
        log_posterior(&k, &m, &prior, &xs, &y).unwrap().0
    };
    let h = 1e-5;
    let scale = grad.iter().fold(1.0f64, |m, g| m.max(g.abs()));
    (0..p.len())
        .map(|i| {
            let mut up = p.clone();
            let mut down = p.clone();
            up[i] += h;
            down[i] -= h;
            let fd = (f(&up) - f(&down)) / (2.0 * h);
            (fd - grad[i]).abs() / grad[i].abs().max(1e-3 * scale)
        })
        .fold(0.0, f64::max)
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for kind in [KernelKind::SquaredExponential, KernelKind::Matern52] {
        for mk in [MeanKind::Constant, MeanKind::Quadratic] {
            for prior in [PriorKind::SmoothBox, PriorKind::Gamma] {
                let err = max_relative_gradient_error(&mut rng, kind, mk, prior);
                assert!(err < 1e-4, "{kind:?} {mk:?} {prior:?}: {err}");
            }
        }
    }
}

#[test]
fn constant_outputs_fit_a_flat_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let xs: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 / 4.0]).collect();
    let y = vec![2.5; 5];
    let model = fit(1, &xs, &y, &GpConfig::default(), &mut rng).unwrap();
    for x in [0.0, 0.13, 0.5, 0.77, 1.0] {
        assert!((model.predict(&[x]).0 - 2.5).abs() < 1e-6);
    }
    assert!(model.kernel().signal_variance < 1e-3, "{}", model.kernel().signal_variance);
}

#[test]
fn refit_is_deterministic() {
    let xs: Vec<Vec<f64>> = (0..7).map(|i| vec![i as f64 / 6.0, (i * i % 7) as f64 / 6.0]).collect();
    let y: Vec<f64> = xs.iter().map(|x| x[0].sin() + x[1]).collect();
    let config = GpConfig { kernel: KernelKind::Matern52, mean: MeanKind::Quadratic, prior: PriorKind::Gamma };
    let a = fit(2, &xs, &y, &config, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    let b = fit(2, &xs, &y, &config, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    assert_eq!(a.kernel(), b.kernel());
    assert_eq!(a.mean(), b.mean());
}

#[test]
fn smooth_function_recovered_at_training_points() {
    let xs: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 / 19.0]).collect();
    let y: Vec<f64> = xs.iter().map(|x| (6.0 * x[0]).sin() + 0.5 * x[0]).collect();
    for kernel in [KernelKind::SquaredExponential, KernelKind::Matern52] {
        let config = GpConfig { kernel, ..GpConfig::default() };
        let model = fit(1, &xs, &y, &config, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        // independent dense solve with the fitted hyperparameters
        let y_std: Vec<f64> = y.iter().map(|v| model.standardization().forward(*v)).collect();
        for (x, v) in xs.iter().zip(&y) {
            let (mu, _) = model.predict(x);
            let (mu_o, _) = oracle_predict(model.kernel(), model.mean(), &xs, &y_std, model.standardization(), x);
            assert!((mu - v).abs() < 3e-2, "{kernel:?}: {mu} vs {v}");
            assert!((mu - mu_o).abs() < 1e-8 * model.standardization().scale.max(mu_o.abs()));
        }
    }
}

#[test]
fn invalid_inputs_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let config = GpConfig::default();
    assert!(fit(2, &[vec![0.1]], &[1.0], &config, &mut rng).is_err());
    assert!(fit(1, &[vec![0.1]], &[f64::NAN], &config, &mut rng).is_err());
    assert!(fit(1, &[vec![0.1]], &[1.0, 2.0], &config, &mut rng).is_err());
    let kernel = KernelSpec::new(KernelKind::Matern52, vec![1.0], 1.0).unwrap();
    let prior = HyperpriorSpec::default_for(PriorKind::SmoothBox);
    assert!(log_posterior(&kernel, &MeanSpec::constant(0.0), &prior, &[], &[]).is_err());
}

#[test]
fn robust_standardization() {
    let s = Standardization::robust(&[1.0, 2.0, 3.0, 4.0, 1000.0]);
    assert_eq!(s.shift, 3.0);
    assert!((s.scale - 2.0 / 1.349).abs() < 1e-12);
    assert_eq!(Standardization::robust(&[4.0]).scale, 1.0);
    let t = Standardization::robust(&[1.0, 1.0, 1.0, 1.0, 5.0]);
    assert!(t.scale > 0.0);
    assert_eq!(t.backward(t.forward(3.7)), 3.7);
}

fn model_strategy() -> impl Strategy<Value = (u64, usize, usize, bool, bool)> {
    (any::<u64>(), 1usize..12, 1usize..4, any::<bool>(), any::<bool>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn posterior_variance_bounded_by_prior((seed, n, d, se, quad) in model_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kind = if se { KernelKind::SquaredExponential } else { KernelKind::Matern52 };
        let mk = if quad { MeanKind::Quadratic } else { MeanKind::Constant };
        let (kernel, mean, xs, y) = random_instance(&mut rng, n, d, kind, mk);
        let s = Standardization::robust(&y);
        let prior_sd = s.scale * kernel.signal_variance.sqrt();
        let model = GpModel::new(kernel.clone(), mean.clone(), xs.clone(), &y, s).unwrap();
        let x: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        let (_, sigma) = model.predict(&x);
        prop_assert!(sigma <= prior_sd * (1.0 + 1e-12));

        // one more observation never increases the variance at x
        let extra: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        let mut xs2 = xs.clone();
        xs2.push(extra);
        let mut y2 = y.clone();
        y2.push(rng.random_range(0.0..10.0));
        let bigger = GpModel::new(kernel.clone(), mean.clone(), xs2, &y2, s).unwrap();
        let (_, sigma2) = bigger.predict(&x);
        prop_assert!(sigma2 * sigma2 <= sigma * sigma + 1e-9 * prior_sd * prior_sd);

        // training order does not matter
        let mut order: Vec<usize> = (0..n).collect();
        order.reverse();
        order.rotate_left(seed as usize % n);
        let xs_p: Vec<Vec<f64>> = order.iter().map(|&i| xs[i].clone()).collect();
        let y_p: Vec<f64> = order.iter().map(|&i| y[i]).collect();
        let permuted = GpModel::new(kernel, mean, xs_p, &y_p, s).unwrap();
        let (mu_a, sd_a) = model.predict(&x);
        let (mu_b, sd_b) = permuted.predict(&x);
        prop_assert!((mu_a - mu_b).abs() <= 1e-10 * mu_a.abs().max(prior_sd));
        prop_assert!((sd_a - sd_b).abs() <= 1e-10 * prior_sd);
    }
}
