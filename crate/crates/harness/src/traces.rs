//! JSON-lines trace files: one evaluation per line.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crashbo::{Evaluation, Trace};
use serde::{Deserialize, Serialize};

use crate::error::{io_error, HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceLine {
    /// 1-based evaluation count.
    pub k: usize,
    pub theta: Vec<f64>,
    pub objective: Option<f64>,
    pub crashed: bool,
    pub fallback: Option<f64>,
    pub wall_time: f64,
}

/// `traces/{problem}/{optimizer}/seed-NNN.jsonl`, relative to the results root.
pub fn relative_trace_path(problem: &str, optimizer: &str, seed: u64) -> PathBuf {
    Path::new("traces").join(problem).join(optimizer).join(format!("seed-{seed:03}.jsonl"))
}

pub fn to_jsonl(trace: &Trace) -> String {
    let mut out = String::new();
    for (i, e) in trace.evaluations.iter().enumerate() {
        let line = TraceLine {
            k: i + 1,
            theta: e.theta.clone(),
            objective: e.objective,
            crashed: e.crashed,
            fallback: e.fallback_objective,
            wall_time: e.wall_time,
        };
        out.push_str(&serde_json::to_string(&line).expect("finite trace values serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_jsonl(text: &str, path: &Path, problem: &str, optimizer: &str, seed: u64) -> Result<Trace> {
    let mut trace = Trace::new(problem, optimizer, seed);
    for (i, raw) in text.lines().enumerate() {
        let malformed = |message: String| HarnessError::MalformedTrace { path: path.to_path_buf(), line: i + 1, message };
        let line: TraceLine = serde_json::from_str(raw).map_err(|e| malformed(e.to_string()))?;
        if line.k != i + 1 {
            return Err(malformed(format!("expected k = {}, found {}", i + 1, line.k)));
        }
        trace.push(Evaluation {
            theta: line.theta,
            objective: line.objective,
            crashed: line.crashed,
            fallback_objective: line.fallback,
            wall_time: line.wall_time,
        });
    }
    Ok(trace)
}

pub fn write_trace(path: &Path, trace: &Trace) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_error(dir))?;
    }
    let mut file = fs::File::create(path).map_err(io_error(path))?;
    file.write_all(to_jsonl(trace).as_bytes()).map_err(io_error(path))
}

pub fn read_trace(path: &Path, problem: &str, optimizer: &str, seed: u64) -> Result<Trace> {
    let text = fs::read_to_string(path).map_err(io_error(path))?;
    parse_jsonl(&text, path, problem, optimizer, seed)
}

/// The trace text with every `wall_time` field removed, for comparing reruns.
pub fn without_wall_time(text: &str) -> String {
    text.lines()
        .map(|line| match serde_json::from_str::<serde_json::Value>(line) {
            Ok(serde_json::Value::Object(mut map)) => {
                map.remove("wall_time");
                serde_json::Value::Object(map).to_string()
            }
            _ => line.to_string(),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Writes `contents` to a temporary sibling, then renames it over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(io_error(&tmp))?;
    fs::rename(&tmp, path).map_err(io_error(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_layout() {
        let mut t = Trace::new("p", "o", 1);
        t.push(Evaluation::success(vec![0.5, -1.0], 2.0));
        t.push(Evaluation::crash(vec![0.1, 0.2], None));
        let text = to_jsonl(&t);
        let first = text.lines().next().unwrap();
        assert_eq!(first, r#"{"k":1,"theta":[0.5,-1.0],"objective":2.0,"crashed":false,"fallback":null,"wall_time":0.0}"#);
        assert_eq!(without_wall_time(first), r#"{"crashed":false,"fallback":null,"k":1,"objective":2.0,"theta":[0.5,-1.0]}"#);
        let bad = text.replace("\"k\":2", "\"k\":5");
        assert!(parse_jsonl(&bad, Path::new("x"), "p", "o", 1).is_err());
    }
}
