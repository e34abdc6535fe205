use ndarray::{ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::critic::{CriticKind, CriticSpec};
use super::train::{split_indices, train_estimator, DataSource, EstimatorConfig};
use crate::error::{Error, Result};
use crate::lindr::{project, rcca_fit, RccaConfig};
use crate::metrics::{gaussian_mi_from_data, DEFAULT_MI_THRESHOLD};
use crate::rng::{derive_seed, nested_subsample};

/// One training run inside a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k_z: usize,
    pub n: usize,
    pub seed: u64,
    pub reported_mi: f64,
    pub step_of_max_test: Option<usize>,
    pub collapsed: bool,
}

/// Mean and spread of the reported MI over repeats of one (k_Z, N) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub k_z: usize,
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub repeats: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub summary: Vec<CellSummary>,
}

impl SweepTable {
    pub fn cell(&self, k_z: usize, n: usize) -> Option<&CellSummary> {
        self.summary.iter().find(|c| c.k_z == k_z && c.n == n)
    }

    /// CSV with header `k_z,n,seed,reported_mi,step_of_max_test`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k_z,n,seed,reported_mi,step_of_max_test\n");
        for r in &self.rows {
            let step = r.step_of_max_test.map(|s| s.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{},{},{}\n", r.k_z, r.n, r.seed, r.reported_mi, step));
        }
        out
    }
}

fn summarize(rows: &[SweepRow]) -> Vec<CellSummary> {
    let mut keys: Vec<(usize, usize)> = rows.iter().map(|r| (r.k_z, r.n)).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.into_iter()
        .map(|(k_z, n)| {
            let vals: Vec<f64> = rows
                .iter()
                .filter(|r| r.k_z == k_z && r.n == n && r.reported_mi.is_finite())
                .map(|r| r.reported_mi)
                .collect();
            let (mean, std) = mean_std(&vals);
            CellSummary { k_z, n, mean, std, repeats: vals.len() }
        })
        .collect()
}

/// Mean and sample standard deviation (ddof 1; 0 for a single value).
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64;
    (m, var.sqrt())
}

/// Trains every (k_Z, N, repeat) combination in parallel. Sample sizes are
/// nested subsamples; each repeat draws its own subsample and initialization.
fn run_grid(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    k_grid: &[usize],
    n_grid: &[usize],
    repeats: usize,
    spec: &CriticSpec,
    cfg: &EstimatorConfig,
) -> Result<Vec<SweepRow>> {
    if spec.kind == CriticKind::Concatenated {
        return Err(Error::Config("embedding sweeps need a separable or bilinear critic".into()));
    }
    if repeats == 0 || k_grid.is_empty() || n_grid.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    let mut jobs = Vec::new();
    for (ki, &k) in k_grid.iter().enumerate() {
        for (ni, &n) in n_grid.iter().enumerate() {
            for r in 0..repeats {
                jobs.push((ki, k, ni, n, r));
            }
        }
    }
    jobs.into_par_iter()
        .map(|(ki, k, ni, n, r)| {
            let seed = derive_seed(cfg.seed, &[ki as u64, ni as u64, r as u64]);
            let rows = nested_subsample(x.nrows(), n, derive_seed(cfg.seed, &[u64::MAX, r as u64]))?;
            let (xs, ys) = (x.select(Axis(0), &rows), y.select(Axis(0), &rows));
            let spec = CriticSpec { embed_dim: k, ..spec.clone() };
            let cfg = EstimatorConfig { seed, ..cfg.clone() };
            let rec = train_estimator(DataSource::Finite { x: xs.view(), y: ys.view() }, &spec, &cfg)?;
            Ok(SweepRow {
                k_z: k,
                n,
                seed,
                reported_mi: rec.reported,
                step_of_max_test: rec.step_of_max_test,
                collapsed: rec.collapsed,
            })
        })
        .collect()
}

/// Reported MI as a function of the critic embedding size, `repeats`
/// independent runs per size on the full sample.
pub fn embedding_sweep(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    k_grid: &[usize],
    spec: &CriticSpec,
    cfg: &EstimatorConfig,
    repeats: usize,
) -> Result<SweepTable> {
    let rows = run_grid(x, y, k_grid, &[x.nrows()], repeats, spec, cfg)?;
    let summary = summarize(&rows);
    Ok(SweepTable { rows, summary })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GuidelinesConfig {
    /// Dimensions tried by the linear (rCCA) stage.
    pub linear_k_grid: Vec<usize>,
    pub rcca: RccaConfig,
    /// The linear curve is saturated when its last two points differ by at
    /// most `max(saturation_rel · I, saturation_abs)`.
    pub saturation_rel: f64,
    pub saturation_abs: f64,
    /// Embedding sizes tried by the neural stage.
    pub neural_k_grid: Vec<usize>,
    /// Subsample sizes as fractions of the full sample.
    pub fractions: Vec<f64>,
    pub repeats: usize,
    pub critic: CriticSpec,
    pub estimator: EstimatorConfig,
    /// Cells agree when their means differ by at most
    /// `max(agreement_sigmas · pooled std, agreement_rel · I, saturation_abs)`.
    pub agreement_sigmas: f64,
    pub agreement_rel: f64,
}

impl Default for GuidelinesConfig {
    fn default() -> Self {
        GuidelinesConfig {
            linear_k_grid: vec![1, 2, 4, 8, 16, 32],
            rcca: RccaConfig::default(),
            saturation_rel: 0.05,
            saturation_abs: 0.02,
            neural_k_grid: vec![1, 2, 4, 8, 16],
            fractions: vec![0.5, 0.75, 1.0],
            repeats: 3,
            critic: CriticSpec::separable(2, 256, 8),
            estimator: EstimatorConfig {
                epochs: 30,
                ..Default::default()
            },
            agreement_sigmas: 2.0,
            agreement_rel: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// The linear estimate saturated in k_Z and is reported.
    LinearSaturated,
    /// A neural estimate was stable in both k_Z and N.
    Reliable,
    /// No stable region was found; no estimate is reported.
    Unreliable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearPoint {
    pub k_z: usize,
    pub mi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuidelinesReport {
    pub linear: Vec<LinearPoint>,
    pub linear_saturated: bool,
    pub neural: Option<SweepTable>,
    pub k_hat: Option<usize>,
    pub estimate: Option<f64>,
    pub sigma: Option<f64>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

/// Linear stage: rCCA fitted on the training split, Gaussian MI of the
/// projected held-out split, for each k in the grid that fits the data.
pub fn linear_mi_curve(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    k_grid: &[usize],
    rcca: &RccaConfig,
    test_fraction: f64,
    seed: u64,
) -> Result<Vec<LinearPoint>> {
    let (train, test) = split_indices(x.nrows(), test_fraction, seed);
    let (xtr, ytr) = (x.select(Axis(0), &train), y.select(Axis(0), &train));
    let (xte, yte) = (x.select(Axis(0), &test), y.select(Axis(0), &test));
    let k_max = x.ncols().min(y.ncols()).min(test.len().saturating_sub(2));
    let mut out = Vec::new();
    for &k in k_grid.iter().filter(|&&k| k >= 1 && k <= k_max) {
        let basis = rcca_fit(xtr.view(), ytr.view(), k, rcca)?;
        let (zx, zy) = project(&basis, xte.view(), Some(yte.view()))?;
        let zy = zy.expect("y projection requested");
        let mi = gaussian_mi_from_data(zx.view(), zy.view(), DEFAULT_MI_THRESHOLD)?;
        out.push(LinearPoint { k_z: k, mi });
    }
    Ok(out)
}

/// Whether the last two points of a curve agree to `max(rel·I, abs)`.
pub fn is_saturated(curve: &[f64], rel: f64, abs: f64) -> bool {
    match curve {
        [.., a, b] => (b - a).abs() <= (rel * b.abs()).max(abs),
        _ => false,
    }
}

/// Runs the reliability procedure: a linear estimate if it saturates, else
/// neural estimates over embedding sizes and subsample sizes, reported only
/// if a plateau in k_Z is also stable under subsampling.
pub fn guidelines_protocol(x: ArrayView2<f64>, y: ArrayView2<f64>, cfg: &GuidelinesConfig) -> Result<GuidelinesReport> {
    if x.nrows() != y.nrows() {
        return Err(Error::shape("x and y have different sample counts"));
    }
    let seed = cfg.estimator.seed;
    let mut notes = Vec::new();
    let linear = linear_mi_curve(x, y, &cfg.linear_k_grid, &cfg.rcca, cfg.estimator.test_fraction, derive_seed(seed, &[7]))?;
    let curve: Vec<f64> = linear.iter().map(|p| p.mi).collect();
    let linear_saturated = is_saturated(&curve, cfg.saturation_rel, cfg.saturation_abs);
    if linear_saturated {
        let last = *curve.last().expect("saturated curve is non-empty");
        notes.push(format!("linear estimate saturated at {last:.4} nats"));
        return Ok(GuidelinesReport {
            linear,
            linear_saturated,
            neural: None,
            k_hat: Some(linear_k_hat(&curve, &cfg.linear_k_grid, cfg)),
            estimate: Some(last),
            sigma: None,
            verdict: Verdict::LinearSaturated,
            notes,
        });
    }
    notes.push("linear estimate not saturated; running neural estimator".into());

    let n_total = x.nrows();
    let mut n_grid: Vec<usize> = cfg
        .fractions
        .iter()
        .map(|f| ((f * n_total as f64).round() as usize).min(n_total))
        .collect();
    n_grid.sort_unstable();
    n_grid.dedup();
    let rows = run_grid(x, y, &cfg.neural_k_grid, &n_grid, cfg.repeats, &cfg.critic, &cfg.estimator)?;
    let table = SweepTable { summary: summarize(&rows), rows };
    let n_full = *n_grid.last().expect("non-empty n grid");

    let agree = |a: &CellSummary, b: &CellSummary| {
        let pooled = ((a.std * a.std + b.std * b.std) / 2.0).sqrt();
        let tol = (cfg.agreement_sigmas * pooled)
            .max(cfg.agreement_rel * a.mean.abs().max(b.mean.abs()))
            .max(cfg.saturation_abs);
        (a.mean - b.mean).abs() <= tol
    };
    let full: Vec<&CellSummary> = cfg.neural_k_grid.iter().filter_map(|&k| table.cell(k, n_full)).collect();
    let mut k_hat = None;
    for (i, c) in full.iter().enumerate() {
        let plateau = full[i..].iter().all(|d| agree(c, d));
        let stable_in_n = n_grid.iter().all(|&n| table.cell(c.k_z, n).is_some_and(|d| agree(c, d)));
        if plateau && stable_in_n && c.mean.is_finite() {
            k_hat = Some((*c).clone());
            break;
        }
    }
    let report = match k_hat {
        Some(c) => {
            notes.push(format!("k_Z = {} is on a plateau and stable under subsampling", c.k_z));
            GuidelinesReport {
                linear,
                linear_saturated,
                neural: Some(table),
                k_hat: Some(c.k_z),
                estimate: Some(c.mean),
                sigma: Some(c.std),
                verdict: Verdict::Reliable,
                notes,
            }
        }
        None => {
            notes.push("no k_Z is both on a plateau and stable under subsampling".into());
            GuidelinesReport {
                linear,
                linear_saturated,
                neural: Some(table),
                k_hat: None,
                estimate: None,
                sigma: None,
                verdict: Verdict::Unreliable,
                notes,
            }
        }
    };
    Ok(report)
}

/// Smallest k after which the linear curve stays within the saturation band
/// of its final value.
fn linear_k_hat(curve: &[f64], grid: &[usize], cfg: &GuidelinesConfig) -> usize {
    let ks: Vec<usize> = grid.iter().copied().filter(|&k| k >= 1).take(curve.len()).collect();
    let last = curve[curve.len() - 1];
    let band = (cfg.saturation_rel * last.abs()).max(cfg.saturation_abs);
    let first = curve.iter().position(|v| (v - last).abs() <= band).unwrap_or(curve.len() - 1);
    ks[first]
}
