use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Generator, Measure};
use crate::datagen::{generate_gaussian_pair, GaussianPairSpec, LinearModel};
use crate::error::{Error, Result};
use crate::lindr::{fit, project};
use crate::metrics::{gaussian_mi_from_data, rc_prime, DEFAULT_MI_THRESHOLD};
use crate::rng::derive_seed;

/// One (cell, trial, method) measurement; failures keep their message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub cell: usize,
    pub trial: usize,
    pub seed: u64,
    pub method: String,
    pub params: Vec<f64>,
    pub value: Option<f64>,
    pub error: Option<String>,
}

/// Mean, sample std (ddof 1) and standard error over the successful trials
/// of one (cell, method).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub cell: usize,
    pub method: String,
    pub params: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub sem: f64,
    pub n_ok: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub name: String,
    pub axes: Vec<String>,
    pub trials: Vec<TrialRow>,
    pub aggregates: Vec<AggregateRow>,
    pub cells_run: usize,
    pub cells_skipped: usize,
}

/// Seed of one trial: a hash of the master seed, cell index and trial index.
pub fn trial_seed(master: u64, cell: usize, trial: usize) -> u64 {
    derive_seed(master, &[cell as u64, trial as u64])
}

/// Generates, fits, projects and measures every method for one trial.
fn run_trial(cfg: &ExperimentConfig, seed: u64) -> Vec<(String, Result<f64>)> {
    let data = match &cfg.generator {
        Generator::Linear { spec } => {
            let mut spec = spec.clone();
            spec.seed_projections = derive_seed(seed, &[0]);
            let t_test = ((spec.t as f64) * cfg.test_ratio).round().max(2.0) as usize;
            LinearModel::new(spec.clone()).and_then(|model| {
                let train = model.sample(derive_seed(seed, &[1]))?;
                let mut test_model = model.clone();
                test_model.spec.t = t_test;
                let test = test_model.sample(derive_seed(seed, &[2]))?;
                Ok((train, test, spec.m_shared))
            })
        }
        Generator::Gaussian { k, mi, n } => {
            let n_test = ((*n as f64) * cfg.test_ratio).round().max(2.0) as usize;
            let spec = GaussianPairSpec::uniform(*k, *mi, *n, derive_seed(seed, &[1]));
            let test_spec = GaussianPairSpec { n: n_test, seed: derive_seed(seed, &[2]), ..spec.clone() };
            generate_gaussian_pair(&spec).and_then(|tr| Ok((tr, generate_gaussian_pair(&test_spec)?, *k)))
        }
    };
    let (train, test, m_shared) = match data {
        Ok(d) => d,
        Err(e) => return cfg.methods.iter().map(|m| (m.to_string(), Err(clone_err(&e)))).collect(),
    };
    cfg.methods
        .iter()
        .map(|&method| {
            let value = (|| {
                let basis = fit(method, train.x.view(), train.y.view(), cfg.k, &cfg.rcca)?;
                let (zx, zy) = project(&basis, test.x.view(), Some(test.y.view()))?;
                let zy = zy.expect("paired projection");
                match cfg.measure {
                    Measure::RcPrime => {
                        let m = m_shared.max(1);
                        Ok(rc_prime(zx.view(), zy.view(), m, cfg.rc0_trials, derive_seed(seed, &[3]))?.rc_prime)
                    }
                    Measure::LinearMi => gaussian_mi_from_data(zx.view(), zy.view(), DEFAULT_MI_THRESHOLD),
                }
            })();
            (method.to_string(), value)
        })
        .collect()
}

fn clone_err(e: &Error) -> Error {
    Error::Domain(e.to_string())
}

/// All trials of one cell.
pub fn run_cell(cfg: &ExperimentConfig, cell: usize) -> Result<Vec<TrialRow>> {
    let cells = cfg.cells();
    let values = cells
        .get(cell)
        .ok_or_else(|| Error::Config(format!("cell {cell} out of range ({} cells)", cells.len())))?;
    let cell_cfg = cfg.cell_config(values)?;
    let mut rows = Vec::new();
    for trial in 0..cfg.trials {
        let seed = trial_seed(cfg.master_seed, cell, trial);
        for (method, value) in run_trial(&cell_cfg, seed) {
            let (value, error) = match value {
                Ok(v) if v.is_finite() => (Some(v), None),
                Ok(v) => (None, Some(format!("non-finite value {v}"))),
                Err(e) => (None, Some(e.to_string())),
            };
            rows.push(TrialRow { cell, trial, seed, method, params: values.clone(), value, error });
        }
    }
    Ok(rows)
}

/// Aggregates trial rows per (cell, method), in first-appearance order.
pub fn aggregate(trials: &[TrialRow]) -> Vec<AggregateRow> {
    let mut keys: Vec<(usize, String, Vec<f64>)> = Vec::new();
    for t in trials {
        if !keys.iter().any(|(c, m, _)| *c == t.cell && *m == t.method) {
            keys.push((t.cell, t.method.clone(), t.params.clone()));
        }
    }
    keys.into_iter()
        .map(|(cell, method, params)| {
            let vals: Vec<f64> = trials
                .iter()
                .filter(|t| t.cell == cell && t.method == method)
                .filter_map(|t| t.value)
                .collect();
            let n = vals.len();
            let mean = if n > 0 { vals.iter().sum::<f64>() / n as f64 } else { f64::NAN };
            let std = if n > 1 {
                (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            let sem = if n > 0 { std / (n as f64).sqrt() } else { f64::NAN };
            AggregateRow { cell, method, params, mean, std, sem, n_ok: n }
        })
        .collect()
}

/// 64-bit FNV-1a, used for content keys of cached cells.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Cache key of a cell: its fully resolved config, trial count and seeds.
fn cell_key(cfg: &ExperimentConfig, cell: usize) -> Result<String> {
    let cells = cfg.cells();
    let mut resolved = cfg.cell_config(&cells[cell])?;
    resolved.output_dir = None;
    resolved.workers = None;
    resolved.name.clear();
    let text = serde_json::to_string(&(resolved, cell))?;
    Ok(format!("{:016x}", derive_seed(cfg.master_seed, &[fnv1a(text.as_bytes())])))
}

fn load_cached(dir: &Path, key: &str) -> Option<Vec<TrialRow>> {
    let text = std::fs::read_to_string(dir.join(format!("{key}.json"))).ok()?;
    serde_json::from_str(&text).ok()
}

/// Runs every cell (in parallel across `workers` threads). With an output
/// directory, finished cells are cached under `cells/` and skipped on rerun.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let n_cells = cfg.cells().len();
    let cache = cfg.output_dir.as_ref().map(|d| d.join("cells"));
    if let Some(dir) = &cache {
        std::fs::create_dir_all(dir)?;
    }
    let keys: Vec<String> = (0..n_cells).map(|c| cell_key(cfg, c)).collect::<Result<_>>()?;

    let work = || -> Result<Vec<(Vec<TrialRow>, bool)>> {
        (0..n_cells)
            .into_par_iter()
            .map(|c| {
                if let Some(dir) = &cache {
                    if let Some(rows) = load_cached(dir, &keys[c]) {
                        return Ok((rows, false));
                    }
                }
                let rows = run_cell(cfg, c)?;
                if let Some(dir) = &cache {
                    let tmp = dir.join(format!("{}.json.tmp", keys[c]));
                    std::fs::write(&tmp, serde_json::to_string(&rows)?)?;
                    std::fs::rename(&tmp, dir.join(format!("{}.json", keys[c])))?;
                }
                Ok((rows, true))
            })
            .collect()
    };
    let results = match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let cells_run = results.iter().filter(|(_, ran)| *ran).count();
    let trials: Vec<TrialRow> = results.into_iter().flat_map(|(rows, _)| rows).collect();
    Ok(SweepResult {
        name: cfg.name.clone(),
        axes: cfg.axis_names(),
        aggregates: aggregate(&trials),
        trials,
        cells_run,
        cells_skipped: n_cells - cells_run,
    })
}
