//! Landscape analysis around a problem's best known point.

use std::fs;
use std::path::{Path, PathBuf};

use crashbo::landscape::{analyze, LandscapeOptions, LandscapeReport};
use crashbo::testbed::Registry;
use crashbo::Domain;
use serde::{Deserialize, Serialize};

use crate::error::{io_error, json_error, HarnessError, Result};
use crate::traces::write_atomic;

/// Fraction of the box width by which an optimum on the boundary is moved inside.
pub const BOUNDARY_NUDGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeRecord {
    pub problem: String,
    pub dim: usize,
    pub seed: u64,
    /// Point the lines pass through.
    pub theta_star: Vec<f64>,
    /// Whether `theta_star` was moved off the boundary.
    pub nudged: bool,
    pub report: LandscapeReport,
}

/// Moves coordinates on (or outside) the boundary a tiny step inside.
pub fn nudge_inside(domain: &Domain, theta: &[f64]) -> (Vec<f64>, bool) {
    let mut moved = false;
    let inside = theta
        .iter()
        .zip(domain.lower().iter().zip(domain.upper()))
        .map(|(t, (lo, hi))| {
            let step = BOUNDARY_NUDGE * (hi - lo);
            let v = t.clamp(lo + step, hi - step);
            moved |= v != *t;
            v
        })
        .collect();
    (inside, moved)
}

pub fn run_landscape(registry: &Registry, problem_id: &str, seed: u64, options: LandscapeOptions) -> Result<LandscapeRecord> {
    let entry = registry.get(problem_id)?;
    let theta = entry.known_best_theta.clone().ok_or_else(|| {
        HarnessError::Config(format!("{problem_id} has no known_best_theta; run `crashbo calibrate` first"))
    })?;
    let problem = entry.build()?;
    let (theta_star, nudged) = nudge_inside(problem.domain(), &theta);
    let report = analyze(problem.as_ref(), &theta_star, options, seed)?;
    Ok(LandscapeRecord { problem: problem_id.to_string(), dim: entry.dim(), seed, theta_star, nudged, report })
}

pub fn landscape_file(dir: &Path, record: &LandscapeRecord) -> PathBuf {
    dir.join(format!("{}-seed-{:03}.json", record.problem, record.seed))
}

pub fn write_landscape(dir: &Path, record: &LandscapeRecord) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(io_error(dir))?;
    let path = landscape_file(dir, record);
    let text = serde_json::to_string_pretty(record).map_err(json_error(&path))?;
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}

/// All records in `dir`, sorted by file name; empty if the directory is absent.
pub fn read_landscapes(dir: &Path) -> Result<Vec<LandscapeRecord>> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_error(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(io_error(p))?;
            serde_json::from_str(&text).map_err(json_error(p))
        })
        .collect()
}

/// Markdown table with the columns d, s_opt, p_crash and T_sim.
pub fn landscape_table(records: &[LandscapeRecord]) -> String {
    let mut out = String::from("| Problem | d | s_opt | p_crash | T_sim |\n|---|---:|---:|---:|---:|\n");
    for r in records {
        out.push_str(&format!(
            "| {} | {} | {:.0} % | {:.0} % | {} |\n",
            r.problem,
            r.dim,
            100.0 * r.report.s_opt,
            100.0 * r.report.p_crash,
            format_seconds(r.report.t_sim)
        ));
    }
    out
}

fn format_seconds(t: f64) -> String {
    if t < 1e-3 {
        format!("{:.0} µs", t * 1e6)
    } else if t < 1.0 {
        format!("{:.1} ms", t * 1e3)
    } else {
        format!("{t:.1} s")
    }
}
