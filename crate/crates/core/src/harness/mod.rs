//! Declarative parameter sweeps over the linear pipelines, with per-cell
//! seeds, resumable execution and CSV/JSON result files.

mod config;
mod emit;
mod run;

pub use config::{apply_axis, ExperimentConfig, Generator, Measure, SweepAxis, AXIS_NAMES};
pub use emit::{emit_results, read_results_csv, SCHEMA_VERSION};
pub use run::{aggregate, run_cell, run_sweep, trial_seed, AggregateRow, SweepResult, TrialRow};

use crate::datagen::DataMatrixPair;
use crate::error::Result;
use crate::rng::nested_subsample;

/// Rows of a seeded permutation prefix; for one seed, smaller subsamples
/// are contained in larger ones.
pub fn subsample_without_replacement(data: &DataMatrixPair, n: usize, seed: u64) -> Result<DataMatrixPair> {
    let rows = nested_subsample(data.samples(), n, seed)?;
    let mut out = data.select_rows(&rows);
    out.provenance = out.provenance.then(&format!("subsample({n})"), &[seed]);
    Ok(out)
}

/// `count` sample sizes from `start` to `stop` spaced evenly in log scale
/// and rounded down.
pub fn geometric_schedule(start: usize, stop: usize, count: usize) -> Vec<usize> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let (a, b) = ((start as f64).ln(), (stop as f64).ln());
            (0..count)
                .map(|i| {
                    let v = (a + (b - a) * i as f64 / (count - 1) as f64).exp();
                    // Guard the endpoints against ln/exp round-off.
                    let r = v.round();
                    if (v - r).abs() < 1e-9 { r as usize } else { v.floor() as usize }
                })
                .collect()
        }
    }
}
