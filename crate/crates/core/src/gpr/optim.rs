//! Box-bounded gradient ascent with limited-memory quasi-Newton directions
//! and backtracking (Armijo) line search.

use std::collections::VecDeque;

pub(crate) struct AscentOptions {
    pub max_iterations: usize,
    pub history: usize,
    pub tolerance: f64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self { max_iterations: 100, history: 6, tolerance: 1e-9 }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, lo), hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*lo, *hi);
    }
}

/// Maximizes `f` from `x0` inside `[lower, upper]`. `f(x, true)` returns the
/// value and gradient, `f(x, false)` at least the value; `None` where the
/// objective cannot be evaluated, treated as `-inf`. Returns the best point
/// and value found.
pub(crate) fn maximize<F>(mut f: F, x0: Vec<f64>, lower: &[f64], upper: &[f64], opts: &AscentOptions) -> (Vec<f64>, f64)
where
    F: FnMut(&[f64], bool) -> Option<(f64, Vec<f64>)>,
{
    let mut x = x0;
    project(&mut x, lower, upper);
    let Some((mut fx, mut g)) = f(&x, true) else {
        return (x, f64::NEG_INFINITY);
    };
    // curvature pairs (s, y) for the ascent problem, stored as for minimizing -f
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let n = x.len();

    for _ in 0..opts.max_iterations {
        // projected gradient: drop components pushing against an active bound
        let pg: Vec<f64> = (0..n)
            .map(|i| {
                if (x[i] <= lower[i] && g[i] < 0.0) || (x[i] >= upper[i] && g[i] > 0.0) {
                    0.0
                } else {
                    g[i]
                }
            })
            .collect();
        if dot(&pg, &pg).sqrt() < 1e-8 {
            break;
        }

        // two-loop recursion on -g gives the minimizing direction for -f
        let mut q: Vec<f64> = pg.iter().map(|v| -v).collect();
        let mut alphas = Vec::with_capacity(pairs.len());
        for (s, y, rho) in pairs.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        // ascent direction
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        if dot(&dir, &pg) <= 0.0 {
            pairs.clear();
            dir = pg.clone();
        }
        if pairs.is_empty() {
            // first step: cap the move at unit length in parameter space
            let norm = dot(&dir, &dir).sqrt();
            if norm > 1.0 {
                dir.iter_mut().for_each(|v| *v /= norm);
            }
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let mut trial: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + step * b).collect();
            project(&mut trial, lower, upper);
            let moved: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            let predicted = dot(&g, &moved);
            if let Some((ft, _)) = f(&trial, false) {
                if ft.is_finite() && ft >= fx + 1e-4 * predicted.max(0.0) && ft >= fx {
                    if let Some((ft, gt)) = f(&trial, true) {
                        accepted = Some((trial, ft, gt, moved));
                    }
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new, s)) = accepted else {
            break;
        };
        let y: Vec<f64> = g.iter().zip(&g_new).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 {
            pairs.push_back((s, y, 1.0 / sy));
            if pairs.len() > opts.history {
                pairs.pop_front();
            }
        }
        let improvement = f_new - fx;
        x = x_new;
        fx = f_new;
        g = g_new;
        if improvement <= opts.tolerance * (1.0 + fx.abs()) {
            break;
        }
    }
    (x, fx)
}
