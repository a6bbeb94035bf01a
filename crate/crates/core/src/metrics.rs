//! Benchmark metrics: regret curves, scaled regret, quantiles, average ranks
//! and the one-sided Wilcoxon rank-sum test.
//!
//! A best-so-far value that does not exist yet (no successful evaluation) is
//! represented as `+inf`.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::problem::Trace;
use crate::stats::norm_cdf;

/// Best successful objective after each evaluation, `+inf` before the first
/// success.
pub fn best_so_far(trace: &Trace) -> Vec<f64> {
    trace.best_so_far().into_iter().map(|b| b.unwrap_or(f64::INFINITY)).collect()
}

/// Best-so-far value after `k` evaluations (1-based); runs shorter than `k`
/// report their final value.
pub fn best_at(curve: &[f64], k: usize) -> f64 {
    if curve.is_empty() || k == 0 {
        return f64::INFINITY;
    }
    curve[k.min(curve.len()) - 1]
}

pub fn simple_regret(curve: &[f64], known_best: f64) -> Vec<f64> {
    curve.iter().map(|b| b - known_best).collect()
}

/// Linear interpolation between order statistics: position `q (n - 1)` in
/// the sorted sample.
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput("quantile of an empty sample"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Parameter(format!("quantile level {q} outside [0, 1]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let position = q * (sorted.len() - 1) as f64;
    let lower = position.floor() as usize;
    let fraction = position - lower as f64;
    let a = sorted[lower];
    if fraction == 0.0 || lower + 1 == sorted.len() {
        return Ok(a);
    }
    let b = sorted[lower + 1];
    Ok(if a == b { a } else { a + fraction * (b - a) })
}

pub fn median(values: &[f64]) -> Result<f64> {
    quantile(values, 0.5)
}

/// Scaled regret curves for all runs on one problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledRegret {
    /// Median random-search regret at the reference evaluation count.
    pub scale: f64,
    /// Per optimizer id, per seed: scaled regret after each evaluation.
    pub curves: BTreeMap<String, BTreeMap<u64, Vec<f64>>>,
}

/// Divides simple regret by the median simple regret of the `reference`
/// optimizer (random search) after `at` evaluations.
pub fn scaled_regret(traces: &[Trace], known_best: f64, reference: &str, at: usize) -> Result<ScaledRegret> {
    let reference_regrets: Vec<f64> = traces
        .iter()
        .filter(|t| t.optimizer_id == reference)
        .map(|t| best_at(&best_so_far(t), at) - known_best)
        .collect();
    if reference_regrets.is_empty() {
        return Err(Error::EmptyInput("no reference runs for scaled regret"));
    }
    let scale = median(&reference_regrets)?;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Degenerate(format!("median {reference} regret at {at} evaluations is {scale}")));
    }
    let mut curves: BTreeMap<String, BTreeMap<u64, Vec<f64>>> = BTreeMap::new();
    for t in traces {
        let curve = best_so_far(t).iter().map(|b| (b - known_best) / scale).collect();
        curves.entry(t.optimizer_id.clone()).or_default().insert(t.seed, curve);
    }
    Ok(ScaledRegret { scale, curves })
}

/// One cell of a results table.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub problem: String,
    pub optimizer: String,
    pub seed: u64,
    pub value: f64,
}

/// Mean ranks (1-based) of `values`, ties sharing the mean of their span.
pub fn mean_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]].total_cmp(&values[order[start]]).is_eq() {
            end += 1;
        }
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Per-optimizer rank averaged over seeds, then over problems. Lower values
/// rank first. Every optimizer needs a value for every (problem, seed) pair
/// that occurs for that problem.
pub fn average_rank(cells: &[Cell]) -> Result<BTreeMap<String, f64>> {
    let optimizers: BTreeSet<&str> = cells.iter().map(|c| c.optimizer.as_str()).collect();
    let mut table: BTreeMap<(&str, u64), BTreeMap<&str, f64>> = BTreeMap::new();
    for c in cells {
        if table.entry((&c.problem, c.seed)).or_default().insert(&c.optimizer, c.value).is_some() {
            return Err(Error::Parameter(format!("duplicate cell {}/{}/{}", c.problem, c.optimizer, c.seed)));
        }
    }
    let mut missing = Vec::new();
    for ((problem, seed), row) in &table {
        for o in &optimizers {
            if !row.contains_key(o) {
                missing.push(format!("{problem}/{o}/{seed}"));
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingCells(missing));
    }
    let names: Vec<&str> = optimizers.into_iter().collect();
    // problem -> optimizer -> (rank sum, seeds)
    let mut per_problem: BTreeMap<&str, Vec<(f64, usize)>> = BTreeMap::new();
    for ((problem, _), row) in &table {
        let values: Vec<f64> = names.iter().map(|o| row[o]).collect();
        let acc = per_problem.entry(problem).or_insert_with(|| vec![(0.0, 0); names.len()]);
        for (slot, r) in acc.iter_mut().zip(mean_ranks(&values)) {
            slot.0 += r;
            slot.1 += 1;
        }
    }
    let problems = per_problem.len() as f64;
    Ok(names
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let total: f64 = per_problem.values().map(|acc| acc[i].0 / acc[i].1 as f64).sum();
            (o.to_string(), total / problems)
        })
        .collect())
}

/// Largest combined sample size for which the exact null distribution is used.
pub const EXACT_LIMIT: usize = 16;

/// P-value of the one-sided rank-sum test of "`a` tends to be smaller than
/// `b`". Exact for small tie-free samples, otherwise the normal approximation
/// with tie and continuity corrections.
pub fn wilcoxon_one_sided(a: &[f64], b: &[f64]) -> Result<f64> {
    check_sizes(a, b)?;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ties = tie_sizes(&pooled);
    if ties.len() == 1 {
        return Ok(0.5);
    }
    if ties.iter().all(|t| *t == 1) && pooled.len() <= EXACT_LIMIT {
        let w: f64 = mean_ranks(&pooled)[..a.len()].iter().sum();
        return Ok(exact_rank_sum_cdf(a.len(), b.len(), w.round() as usize));
    }
    rank_sum_normal(a, b)
}

/// Normal approximation of the one-sided rank-sum p-value with tie and
/// continuity corrections, regardless of sample size.
pub fn rank_sum_normal(a: &[f64], b: &[f64]) -> Result<f64> {
    check_sizes(a, b)?;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ties = tie_sizes(&pooled);
    if ties.len() == 1 {
        return Ok(0.5);
    }
    let (m, n) = (a.len(), b.len());
    let total = m + n;
    let w: f64 = mean_ranks(&pooled)[..m].iter().sum();
    let u = w - (m * (m + 1)) as f64 / 2.0;
    let mean = (m * n) as f64 / 2.0;
    let correction: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (total * (total - 1)) as f64;
    let variance = (m * n) as f64 / 12.0 * ((total + 1) as f64 - correction);
    Ok(norm_cdf((u - mean + 0.5) / variance.sqrt()).clamp(0.0, 1.0))
}

fn check_sizes(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() < 3 || b.len() < 3 {
        return Err(Error::Parameter(format!("rank-sum test needs three values per sample, got {} and {}", a.len(), b.len())));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::Parameter("rank-sum test on NaN".into()));
    }
    Ok(())
}

fn tie_sizes(values: &[f64]) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut sizes = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j].total_cmp(&sorted[i]).is_eq() {
            j += 1;
        }
        sizes.push(j - i);
        i = j;
    }
    sizes
}

/// `Pr(W <= w)` for the rank sum `W` of `m` values drawn without replacement
/// from ranks `1..=m+n`.
pub fn exact_rank_sum_cdf(m: usize, n: usize, w: usize) -> f64 {
    let total = m + n;
    let max_sum = total * (total + 1) / 2;
    // ways[k][s]: subsets of size k with rank sum s
    let mut ways = vec![vec![0f64; max_sum + 1]; m + 1];
    ways[0][0] = 1.0;
    for rank in 1..=total {
        for k in (1..=m.min(rank)).rev() {
            for s in (rank..=max_sum).rev() {
                ways[k][s] += ways[k - 1][s - rank];
            }
        }
    }
    let all: f64 = ways[m].iter().sum();
    let below: f64 = ways[m][..=w.min(max_sum)].iter().sum();
    below / all
}
