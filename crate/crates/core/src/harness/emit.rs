use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use super::run::{AggregateRow, SweepResult, TrialRow};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("csv: {e}"))
}

fn header(axes: &[String]) -> Vec<String> {
    let mut h: Vec<String> = ["kind", "cell", "trial", "seed", "method"].iter().map(|s| s.to_string()).collect();
    h.extend(axes.iter().cloned());
    h.extend(["value", "std", "sem", "n_ok", "error"].iter().map(|s| s.to_string()));
    h
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `<dir>/results.csv` (trial rows, then aggregate rows) and
/// `<dir>/summary.json`. Returns both paths.
pub fn emit_results(result: &SweepResult, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join("results.csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(csv_err)?;
    w.write_record(header(&result.axes)).map_err(csv_err)?;
    for t in &result.trials {
        let mut rec = vec!["trial".to_string(), t.cell.to_string(), t.trial.to_string(), t.seed.to_string(), t.method.clone()];
        rec.extend(t.params.iter().map(|p| p.to_string()));
        rec.extend([opt(t.value), String::new(), String::new(), String::new(), t.error.clone().unwrap_or_default()]);
        w.write_record(&rec).map_err(csv_err)?;
    }
    for a in &result.aggregates {
        let mut rec = vec!["aggregate".to_string(), a.cell.to_string(), String::new(), String::new(), a.method.clone()];
        rec.extend(a.params.iter().map(|p| p.to_string()));
        rec.extend([a.mean.to_string(), a.std.to_string(), a.sem.to_string(), a.n_ok.to_string(), String::new()]);
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;

    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let summary = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "generated_at_unix": timestamp,
        "name": result.name,
        "axes": result.axes,
        "cells_run": result.cells_run,
        "cells_skipped": result.cells_skipped,
        "aggregates": result.aggregates,
    });
    let json_path = dir.join("summary.json");
    std::fs::write(&json_path, serde_json::to_string_pretty(&summary)?)?;
    Ok((csv_path, json_path))
}

fn parse<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Config(format!("bad {what} field `{s}`")))
}

fn parse_opt<T: std::str::FromStr>(s: &str, what: &str) -> Result<Option<T>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse(s, what).map(Some)
    }
}

/// Reads a results CSV back into axis names, trial rows and aggregate rows.
pub fn read_results_csv(path: &Path) -> Result<(Vec<String>, Vec<TrialRow>, Vec<AggregateRow>)> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let head: Vec<String> = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
    if head.len() < 10 || head[0] != "kind" {
        return Err(Error::Config("not a results CSV".into()));
    }
    let axes: Vec<String> = head[5..head.len() - 5].to_vec();
    let na = axes.len();
    let (mut trials, mut aggs) = (Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let f = |i: usize| rec.get(i).unwrap_or("");
        let params = (0..na).map(|i| parse::<f64>(f(5 + i), "axis")).collect::<Result<Vec<_>>>()?;
        let tail = 5 + na;
        match f(0) {
            "trial" => trials.push(TrialRow {
                cell: parse(f(1), "cell")?,
                trial: parse(f(2), "trial")?,
                seed: parse(f(3), "seed")?,
                method: f(4).to_string(),
                params,
                value: parse_opt(f(tail), "value")?,
                error: Some(f(tail + 4).to_string()).filter(|s| !s.is_empty()),
            }),
            "aggregate" => aggs.push(AggregateRow {
                cell: parse(f(1), "cell")?,
                method: f(4).to_string(),
                params,
                mean: parse(f(tail), "mean")?,
                std: parse(f(tail + 1), "std")?,
                sem: parse(f(tail + 2), "sem")?,
                n_ok: parse(f(tail + 3), "n_ok")?,
            }),
            other => return Err(Error::Config(format!("unknown row kind `{other}`"))),
        }
    }
    Ok((axes, trials, aggs))
}
