//! Tables, CSV curves and charts from a results directory.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use crashbo::metrics::{best_at, best_so_far, mean_ranks, quantile, scaled_regret, wilcoxon_one_sided, ScaledRegret};
use crashbo::testbed::Registry;
use crashbo::Trace;
use serde::Serialize;

use crate::error::{io_error, HarnessError, Result};
use crate::landscape::{landscape_table, read_landscapes};
use crate::optimizers::{GRID, RANDOM};
use crate::runner::{RunIndex, REGISTRY_FILE};
use crate::svg::{line_chart, Chart, Series};
use crate::traces::read_trace;

/// Scaled regret is normalized at `REFERENCE_MULTIPLIER * d` evaluations.
pub const REFERENCE_MULTIPLIER: usize = 25;
pub const SIGNIFICANCE: f64 = 0.05;
pub const REPORT_DIR: &str = "report";
pub const LANDSCAPE_DIR: &str = "landscape";

pub struct Results {
    pub root: PathBuf,
    pub index: RunIndex,
    pub registry: Registry,
    pub traces: Vec<Trace>,
}

pub fn load_results(root: &Path) -> Result<Results> {
    let index = RunIndex::load(root)?;
    if index.runs.is_empty() {
        return Err(HarnessError::EmptyResults(root.to_path_buf()));
    }
    let registry_path = root.join(REGISTRY_FILE);
    let text = fs::read_to_string(&registry_path).map_err(io_error(&registry_path))?;
    let registry = Registry::parse(&text)?;
    let traces = index
        .runs
        .iter()
        .map(|r| read_trace(&root.join(&r.file), &r.problem, &r.optimizer, r.seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(Results { root: root.to_path_buf(), index, registry, traces })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub optimizer: String,
    /// Scaled regret per seed, in seed order.
    pub values: Vec<f64>,
    pub median: f64,
    pub q20: f64,
    pub q80: f64,
    /// Rank of the median among the non-grid optimizers.
    pub rank: Option<f64>,
    pub best: bool,
    /// One-sided Wilcoxon p-value of "best is better than this optimizer".
    pub p_value: Option<f64>,
    pub not_worse: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemTable {
    pub problem: String,
    pub dim: usize,
    pub known_best: f64,
    /// Median random-search regret at `at` evaluations.
    pub scale: f64,
    pub at: usize,
    pub cells: Vec<CellSummary>,
}

struct ProblemData<'a> {
    problem: &'a str,
    dim: usize,
    known_best: f64,
    scaled: ScaledRegret,
    at: usize,
}

fn problem_data<'a>(results: &'a Results, problem: &'a str) -> Result<ProblemData<'a>> {
    let traces: Vec<Trace> = results.traces.iter().filter(|t| t.problem_id == problem).cloned().collect();
    let entry = results.registry.get(problem)?;
    let dim = entry.dim();
    let campaign_best = traces.iter().filter_map(|t| crashbo::incumbent(t).map(|(_, v)| v)).fold(f64::INFINITY, f64::min);
    let known_best = entry.known_best.map_or(campaign_best, |k| k.min(campaign_best));
    let at = REFERENCE_MULTIPLIER * dim;
    let scaled = scaled_regret(&traces, known_best, RANDOM, at)?;
    Ok(ProblemData { problem, dim, known_best, scaled, at })
}

fn optimizer_order(results: &Results) -> Vec<String> {
    let present: BTreeSet<&str> = results.traces.iter().map(|t| t.optimizer_id.as_str()).collect();
    results.index.config.optimizers.iter().filter(|o| present.contains(o.as_str())).cloned().collect()
}

fn problem_order(results: &Results) -> Vec<String> {
    let present: BTreeSet<&str> = results.traces.iter().map(|t| t.problem_id.as_str()).collect();
    results.index.config.problems.iter().filter(|p| present.contains(p.as_str())).cloned().collect()
}

/// Per-problem median scaled regret at `25 d` (grid search at its own
/// evaluation count) with ranks and significance marks.
pub fn problem_tables(results: &Results) -> Result<Vec<ProblemTable>> {
    let optimizers = optimizer_order(results);
    let mut tables = Vec::new();
    for problem in problem_order(results) {
        let data = problem_data(results, &problem)?;
        let mut cells = Vec::new();
        for o in &optimizers {
            let Some(curves) = data.scaled.curves.get(o) else { continue };
            let values: Vec<f64> =
                curves.values().map(|c| best_at(c, if o == GRID { c.len() } else { data.at })).collect();
            cells.push(CellSummary {
                optimizer: o.clone(),
                median: quantile(&values, 0.5)?,
                q20: quantile(&values, 0.2)?,
                q80: quantile(&values, 0.8)?,
                values,
                rank: None,
                best: false,
                p_value: None,
                not_worse: false,
            });
        }
        let ranked: Vec<usize> = (0..cells.len()).filter(|&i| cells[i].optimizer != GRID).collect();
        let medians: Vec<f64> = ranked.iter().map(|&i| cells[i].median).collect();
        for (&i, r) in ranked.iter().zip(mean_ranks(&medians)) {
            cells[i].rank = Some(r);
        }
        if let Some(&best) = ranked.iter().min_by(|&&a, &&b| cells[a].median.total_cmp(&cells[b].median)) {
            cells[best].best = true;
            cells[best].not_worse = true;
            let reference = cells[best].values.clone();
            for cell in cells.iter_mut().filter(|c| !c.best) {
                if let Ok(p) = wilcoxon_one_sided(&reference, &cell.values) {
                    cell.p_value = Some(p);
                    cell.not_worse = p >= SIGNIFICANCE;
                }
            }
        }
        tables.push(ProblemTable {
            problem: problem.clone(),
            dim: data.dim,
            known_best: data.known_best,
            scale: data.scaled.scale,
            at: data.at,
            cells,
        });
    }
    Ok(tables)
}

fn fmt_value(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.2}")
    } else {
        "inf".into()
    }
}

/// Markdown table: one row per optimizer, one column per problem.
pub fn markdown_table(tables: &[ProblemTable], optimizers: &[String]) -> String {
    let mut out = String::from("| Optimizer |");
    let mut rule = String::from("|---|");
    for t in tables {
        out.push_str(&format!(" {} (d = {}) |", t.problem, t.dim));
        rule.push_str("---:|");
    }
    out.push('\n');
    out.push_str(&rule);
    out.push('\n');
    for o in optimizers {
        out.push_str(&format!("| {o} |"));
        for t in tables {
            let text = match t.cells.iter().find(|c| &c.optimizer == o) {
                None => "".to_string(),
                Some(c) => {
                    let mut median = fmt_value(c.median);
                    if c.best {
                        median = format!("<u>{median}</u>");
                    }
                    if c.not_worse {
                        median = format!("**{median}**");
                    }
                    match c.rank {
                        Some(r) => format!("{median} [{}, {}] ({})", fmt_value(c.q20), fmt_value(c.q80), fmt_rank(r)),
                        None => median,
                    }
                }
            };
            out.push_str(&format!(" {text} |"));
        }
        out.push('\n');
    }
    out
}

fn fmt_rank(r: f64) -> String {
    if r.fract() == 0.0 {
        format!("{r:.0}")
    } else {
        format!("{r:.1}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct CurveRow {
    problem: String,
    optimizer: String,
    k: usize,
    k_over_d: f64,
    median_scaled_regret: f64,
    q80_scaled_regret: f64,
    average_rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct SummaryRow<'a> {
    problem: &'a str,
    optimizer: &'a str,
    seed: u64,
    k: usize,
    best_so_far: f64,
    scaled_regret: f64,
}

/// Seeds every optimizer in `optimizers` has run.
fn common_seeds(scaled: &ScaledRegret, optimizers: &[String]) -> Vec<u64> {
    let mut seeds: Option<BTreeSet<u64>> = None;
    for o in optimizers {
        let own: BTreeSet<u64> = scaled.curves.get(o).map(|c| c.keys().copied().collect()).unwrap_or_default();
        seeds = Some(match seeds {
            None => own,
            Some(s) => s.intersection(&own).copied().collect(),
        });
    }
    seeds.unwrap_or_default().into_iter().collect()
}

/// Average rank over `seeds` of each optimizer's value at `k`.
fn ranks_at(scaled: &ScaledRegret, optimizers: &[String], seeds: &[u64], k: usize) -> Vec<f64> {
    let mut sums = vec![0.0; optimizers.len()];
    for s in seeds {
        let values: Vec<f64> = optimizers.iter().map(|o| best_at(&scaled.curves[o][s], k)).collect();
        for (acc, r) in sums.iter_mut().zip(mean_ranks(&values)) {
            *acc += r;
        }
    }
    sums.iter().map(|v| v / seeds.len().max(1) as f64).collect()
}

fn curve_rows(data: &[ProblemData], optimizers: &[String]) -> Result<Vec<CurveRow>> {
    let mut rows = Vec::new();
    let mut horizon = usize::MAX;
    for d in data {
        let names: Vec<String> = optimizers.iter().filter(|o| d.scaled.curves.contains_key(*o)).cloned().collect();
        let seeds = common_seeds(&d.scaled, &names);
        let budget = names.iter().flat_map(|o| d.scaled.curves[o].values().map(Vec::len)).max().unwrap_or(0);
        horizon = horizon.min(budget / d.dim);
        for k in 1..=budget {
            let ranks = ranks_at(&d.scaled, &names, &seeds, k);
            for (o, rank) in names.iter().zip(ranks) {
                let values: Vec<f64> = d.scaled.curves[o].values().map(|c| best_at(c, k)).collect();
                rows.push(CurveRow {
                    problem: d.problem.to_string(),
                    optimizer: o.clone(),
                    k,
                    k_over_d: k as f64 / d.dim as f64,
                    median_scaled_regret: quantile(&values, 0.5)?,
                    q80_scaled_regret: quantile(&values, 0.8)?,
                    average_rank: rank,
                });
            }
        }
    }
    // across problems at whole multiples of d
    if data.len() > 1 && horizon != usize::MAX {
        for r in 1..=horizon {
            for o in optimizers {
                let mut values = Vec::new();
                let mut rank_sum = 0.0;
                let mut problems = 0;
                for d in data {
                    let names: Vec<String> =
                        optimizers.iter().filter(|o| d.scaled.curves.contains_key(*o)).cloned().collect();
                    let Some(pos) = names.iter().position(|n| n == o) else { continue };
                    let seeds = common_seeds(&d.scaled, &names);
                    rank_sum += ranks_at(&d.scaled, &names, &seeds, r * d.dim)[pos];
                    problems += 1;
                    values.extend(d.scaled.curves[o].values().map(|c| best_at(c, r * d.dim)));
                }
                if problems == 0 {
                    continue;
                }
                rows.push(CurveRow {
                    problem: "all".into(),
                    optimizer: o.clone(),
                    k: r,
                    k_over_d: r as f64,
                    median_scaled_regret: quantile(&values, 0.5)?,
                    q80_scaled_regret: quantile(&values, 0.8)?,
                    average_rank: rank_sum / problems as f64,
                });
            }
        }
    }
    Ok(rows)
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    writer.into_inner().map_err(|e| HarnessError::Csv(e.into_error().into()))
}

fn chart(rows: &[CurveRow], problem: &str, title: &str, y_label: &str, log_y: bool, pick: fn(&CurveRow) -> f64) -> String {
    let mut series: Vec<Series> = Vec::new();
    for row in rows.iter().filter(|r| r.problem == problem) {
        match series.iter_mut().find(|s| s.name == row.optimizer) {
            Some(s) => s.points.push((row.k_over_d, pick(row))),
            None => series.push(Series { name: row.optimizer.clone(), points: vec![(row.k_over_d, pick(row))] }),
        }
    }
    line_chart(&Chart { title, x_label: "evaluations / d", y_label, log_y, series: &series })
}

#[derive(Debug, Clone)]
pub struct ReportOutput {
    pub tables: Vec<ProblemTable>,
    pub markdown: String,
    pub files: Vec<PathBuf>,
}

/// Writes `report/` inside the results directory.
pub fn report(root: &Path) -> Result<ReportOutput> {
    let results = load_results(root)?;
    let optimizers = optimizer_order(&results);
    let tables = problem_tables(&results)?;
    let data: Vec<ProblemData> =
        tables.iter().map(|t| problem_data(&results, &t.problem)).collect::<Result<_>>()?;
    let curve_optimizers: Vec<String> = optimizers.iter().filter(|o| o.as_str() != GRID).cloned().collect();
    let rows = curve_rows(&data, &curve_optimizers)?;

    let out_dir = root.join(REPORT_DIR);
    fs::create_dir_all(&out_dir).map_err(io_error(&out_dir))?;
    let mut files = Vec::new();
    let mut write = |name: String, bytes: &[u8]| -> Result<()> {
        let path = out_dir.join(name);
        fs::write(&path, bytes).map_err(io_error(&path))?;
        files.push(path);
        Ok(())
    };

    let mut markdown = format!(
        "# Benchmark results\n\nMedian scaled regret after {REFERENCE_MULTIPLIER} d evaluations with the \
         [20 %, 80 %] quantiles over seeds and the rank of the median. Bold: not significantly worse than \
         the best optimizer (underlined), one-sided Wilcoxon rank-sum test at {:.0} %. Grid search is \
         reported at its own evaluation count.\n\n",
        100.0 * SIGNIFICANCE
    );
    markdown.push_str(&markdown_table(&tables, &optimizers));
    let landscapes = read_landscapes(&root.join(LANDSCAPE_DIR))?;
    if !landscapes.is_empty() {
        markdown.push_str("\n## Landscape\n\n");
        markdown.push_str(&landscape_table(&landscapes));
    }
    write("table.md".into(), markdown.as_bytes())?;
    write("curves.csv".into(), &csv_bytes(&rows)?)?;

    let mut summary = Vec::new();
    for (t, d) in results.traces.iter().zip(results.index.runs.iter()) {
        let table = data.iter().find(|p| p.problem == d.problem).expect("problem analysed");
        for (k, b) in best_so_far(t).iter().enumerate() {
            summary.push(SummaryRow {
                problem: &d.problem,
                optimizer: &d.optimizer,
                seed: d.seed,
                k: k + 1,
                best_so_far: *b,
                scaled_regret: (b - table.known_best) / table.scaled.scale,
            });
        }
    }
    write("summary.csv".into(), &csv_bytes(&summary)?)?;

    for t in &tables {
        let p = &t.problem;
        write(format!("median-{p}.svg"), chart(&rows, p, &format!("{p}: median scaled regret"), "scaled regret", true, |r| r.median_scaled_regret).as_bytes())?;
        write(format!("q80-{p}.svg"), chart(&rows, p, &format!("{p}: 80 % quantile of scaled regret"), "scaled regret", true, |r| r.q80_scaled_regret).as_bytes())?;
        write(format!("rank-{p}.svg"), chart(&rows, p, &format!("{p}: average rank"), "rank", false, |r| r.average_rank).as_bytes())?;
    }
    if rows.iter().any(|r| r.problem == "all") {
        write("median-all.svg".into(), chart(&rows, "all", "All problems: median scaled regret", "scaled regret", true, |r| r.median_scaled_regret).as_bytes())?;
        write("rank-all.svg".into(), chart(&rows, "all", "All problems: average rank", "rank", false, |r| r.average_rank).as_bytes())?;
    }
    Ok(ReportOutput { tables, markdown, files })
}

/// Medians by problem then optimizer, for quick inspection.
pub fn medians(tables: &[ProblemTable]) -> BTreeMap<(String, String), f64> {
    tables
        .iter()
        .flat_map(|t| t.cells.iter().map(move |c| ((t.problem.clone(), c.optimizer.clone()), c.median)))
        .collect()
}
