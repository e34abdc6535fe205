use ndarray::{Array2, ArrayView2, Axis};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::critic::{Critic, CriticSpec};
use super::objective::{Objective, ObjectiveKind};
use crate::datagen::rho_for_target_mi;
use crate::error::{Error, Result};
use crate::nncore::AdamState;
use crate::rng::{derive_seed, permutation, rng_from_seed, SeededRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    pub objective: ObjectiveKind,
    /// SMILE clip; `None` disables clipping.
    pub tau: Option<f64>,
    pub batch_size: usize,
    /// Passes over the training split in finite-data mode.
    pub epochs: usize,
    pub lr: f64,
    pub smoothing_window: usize,
    pub seed: u64,
    pub ema_rate: f64,
    /// Evaluation cadence in streaming mode, in steps.
    pub eval_every: usize,
    pub test_fraction: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            objective: ObjectiveKind::Infonce,
            tau: Some(5.0),
            batch_size: 128,
            epochs: 50,
            lr: 5e-4,
            smoothing_window: 100,
            seed: 0,
            ema_rate: 0.99,
            eval_every: 100,
            test_fraction: 0.1,
        }
    }
}

impl EstimatorConfig {
    fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(Error::Config("batch size must be at least 2".into()));
        }
        if let Some(t) = self.tau {
            if !(t > 0.0) {
                return Err(Error::Config("tau must be positive".into()));
            }
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config("test_fraction must lie in (0, 1)".into()));
        }
        if self.smoothing_window == 0 || self.eval_every == 0 {
            return Err(Error::Config("smoothing_window and eval_every must be positive".into()));
        }
        Ok(())
    }
}

/// Correlated Gaussian batches whose true MI steps through `levels`, each
/// held for `steps_per_level` steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaircaseSpec {
    pub k: usize,
    pub levels: Vec<f64>,
    pub steps_per_level: usize,
    /// Replace Y by Y³.
    pub cubic: bool,
}

impl StaircaseSpec {
    pub fn total_steps(&self) -> usize {
        self.levels.len() * self.steps_per_level
    }

    pub fn level_at(&self, step: usize) -> f64 {
        self.levels[(step / self.steps_per_level).min(self.levels.len() - 1)]
    }

    fn batch(&self, step: usize, n: usize, rng: &mut SeededRng) -> (Array2<f64>, Array2<f64>) {
        let rho = rho_for_target_mi(self.k, self.level_at(step))[0];
        let c = (1.0 - rho * rho).sqrt();
        let mut x = Array2::zeros((n, self.k));
        let mut y = Array2::zeros((n, self.k));
        for i in 0..n {
            for j in 0..self.k {
                let a: f64 = StandardNormal.sample(rng);
                let b: f64 = StandardNormal.sample(rng);
                x[[i, j]] = a;
                let v = rho * a + c * b;
                y[[i, j]] = if self.cubic { v * v * v } else { v };
            }
        }
        (x, y)
    }
}

pub enum DataSource<'a> {
    /// Fresh batches every step.
    Staircase(StaircaseSpec),
    /// Fixed sample split into train and test parts.
    Finite { x: ArrayView2<'a, f64>, y: ArrayView2<'a, f64> },
}

/// Training trace of one estimator run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Estimate on each training batch, before the update.
    pub train_estimates: Vec<f64>,
    /// Trailing mean of `train_estimates` over the smoothing window.
    pub smoothed: Vec<f64>,
    /// True MI per step, when the source knows it.
    pub true_mi: Vec<f64>,
    /// Step index after which each evaluation was taken.
    pub eval_steps: Vec<usize>,
    pub train_eval: Vec<f64>,
    pub test_eval: Vec<f64>,
    pub max_test_index: Option<usize>,
    pub step_of_max_test: Option<usize>,
    /// Train estimate at the evaluation where the test estimate peaks.
    pub reported: f64,
    pub collapsed: bool,
    pub collapse_reason: Option<String>,
}

impl RunRecord {
    fn finish(&mut self) {
        if let Some((idx, _)) = self
            .test_eval
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .max_by(|a, b| a.1.total_cmp(b.1))
        {
            self.max_test_index = Some(idx);
            self.step_of_max_test = Some(self.eval_steps[idx]);
            self.reported = self.train_eval[idx];
        } else {
            self.reported = f64::NAN;
        }
    }

    fn push_estimate(&mut self, value: f64, window: usize) {
        self.train_estimates.push(value);
        let n = self.train_estimates.len();
        let lo = n.saturating_sub(window);
        let tail = &self.train_estimates[lo..];
        self.smoothed.push(tail.iter().sum::<f64>() / tail.len() as f64);
    }

    fn collapse(&mut self, reason: String) {
        self.collapsed = true;
        self.collapse_reason = Some(reason);
    }
}

/// One optimization step; returns the pre-update batch estimate.
fn step(
    critic: &mut Critic,
    objective: &mut Objective,
    adam: &mut AdamState,
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
) -> Result<f64> {
    let (scores, tape) = critic.forward(x, y)?;
    let out = objective.train_step(scores.view())?;
    if objective.kind == ObjectiveKind::Infonce {
        assert!(
            out.estimate <= (x.nrows() as f64).ln() + 1e-9,
            "InfoNCE exceeded ln(batch): {}",
            out.estimate
        );
    }
    // Ascend the surrogate: descend on its negative.
    let neg = out.grad.mapv(|g| -g);
    let (grads, _, _) = critic.backward(tape, neg.view());
    let slices: Vec<&[f64]> = grads.iter().map(|g| g.as_slice()).collect();
    adam.update(critic.params_mut(), &slices)?;
    Ok(out.estimate)
}

/// Mean estimate over consecutive batches of `x`, `y` in row order.
pub fn evaluate(critic: &Critic, objective: &Objective, x: ArrayView2<f64>, y: ArrayView2<f64>, batch: usize) -> Result<f64> {
    let n = x.nrows();
    let batch = batch.min(n);
    let chunks = (n / batch).max(1);
    let mut total = 0.0;
    for c in 0..chunks {
        let r = c * batch..(c + 1) * batch;
        let s = critic.scores(x.slice(ndarray::s![r.clone(), ..]), y.slice(ndarray::s![r, ..]))?;
        total += objective.estimate(s.view())?;
    }
    Ok(total / chunks as f64)
}

/// Deterministic train/test split of `n` rows; the test part gets
/// `round(n·fraction)` rows (at least 2).
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let perm = permutation(&mut rng_from_seed(seed), n);
    let n_test = ((n as f64 * fraction).round() as usize).clamp(2.min(n), n);
    let (test, train) = perm.split_at(n_test);
    (train.to_vec(), test.to_vec())
}

/// Trains a critic under `cfg` and records the estimate trace. Numerical
/// failures end the run early with the record flagged as collapsed.
pub fn train_estimator(source: DataSource<'_>, spec: &CriticSpec, cfg: &EstimatorConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let mut init_rng = rng_from_seed(derive_seed(cfg.seed, &[0]));
    let mut objective = Objective::new(cfg.objective, cfg.tau, cfg.ema_rate);
    let mut adam = AdamState::new(cfg.lr);
    let mut record = RunRecord::default();
    match source {
        DataSource::Staircase(stairs) => {
            if stairs.levels.is_empty() || stairs.steps_per_level == 0 || stairs.k == 0 {
                return Err(Error::Config("staircase needs levels, steps and k".into()));
            }
            let mut critic = Critic::new(spec, stairs.k, stairs.k, &mut init_rng)?;
            let mut data_rng = rng_from_seed(derive_seed(cfg.seed, &[1]));
            let mut test_rng = rng_from_seed(derive_seed(cfg.seed, &[2]));
            for s in 0..stairs.total_steps() {
                let (x, y) = stairs.batch(s, cfg.batch_size, &mut data_rng);
                record.true_mi.push(stairs.level_at(s));
                match step(&mut critic, &mut objective, &mut adam, x.view(), y.view()) {
                    Ok(v) if v.is_finite() => record.push_estimate(v, cfg.smoothing_window),
                    Ok(v) => {
                        record.collapse(format!("estimate {v} at step {s}"));
                        break;
                    }
                    Err(e) => {
                        record.collapse(e.to_string());
                        break;
                    }
                }
                if (s + 1) % cfg.eval_every == 0 {
                    let (tx, ty) = stairs.batch(s, cfg.batch_size, &mut test_rng);
                    let test = evaluate(&critic, &objective, tx.view(), ty.view(), cfg.batch_size)?;
                    let n = record.train_estimates.len();
                    let recent = &record.train_estimates[n.saturating_sub(cfg.eval_every)..];
                    record.eval_steps.push(s + 1);
                    record.train_eval.push(recent.iter().sum::<f64>() / recent.len() as f64);
                    record.test_eval.push(test);
                }
            }
        }
        DataSource::Finite { x, y } => {
            if x.nrows() != y.nrows() {
                return Err(Error::shape("x and y have different sample counts"));
            }
            let (train, test) = split_indices(x.nrows(), cfg.test_fraction, derive_seed(cfg.seed, &[3]));
            if train.len() < cfg.batch_size {
                return Err(Error::Config(format!(
                    "training split of {} rows is smaller than the batch size {}",
                    train.len(),
                    cfg.batch_size
                )));
            }
            let (xtr, ytr) = (x.select(Axis(0), &train), y.select(Axis(0), &train));
            let (xte, yte) = (x.select(Axis(0), &test), y.select(Axis(0), &test));
            let mut critic = Critic::new(spec, x.ncols(), y.ncols(), &mut init_rng)?;
            let mut shuffle_rng = rng_from_seed(derive_seed(cfg.seed, &[4]));
            let batches = train.len() / cfg.batch_size;
            let mut global = 0;
            'epochs: for _ in 0..cfg.epochs {
                let order = permutation(&mut shuffle_rng, train.len());
                for b in 0..batches {
                    let idx = &order[b * cfg.batch_size..(b + 1) * cfg.batch_size];
                    let bx = xtr.select(Axis(0), idx);
                    let by = ytr.select(Axis(0), idx);
                    match step(&mut critic, &mut objective, &mut adam, bx.view(), by.view()) {
                        Ok(v) if v.is_finite() => record.push_estimate(v, cfg.smoothing_window),
                        Ok(v) => {
                            record.collapse(format!("estimate {v} at step {global}"));
                            break 'epochs;
                        }
                        Err(e) => {
                            record.collapse(e.to_string());
                            break 'epochs;
                        }
                    }
                    global += 1;
                }
                let tr = evaluate(&critic, &objective, xtr.view(), ytr.view(), cfg.batch_size)?;
                let te = evaluate(&critic, &objective, xte.view(), yte.view(), cfg.batch_size)?;
                if !(tr.is_finite() && te.is_finite()) {
                    record.collapse(format!("non-finite evaluation after step {global}"));
                    break;
                }
                record.eval_steps.push(global);
                record.train_eval.push(tr);
                record.test_eval.push(te);
            }
        }
    }
    record.finish();
    Ok(record)
}

/// Per-level summary of a staircase run: the smoothed estimate at the last
/// step of the level, and mean and variance of raw estimates over the last
/// `tail` steps of the level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: f64,
    pub smoothed_end: f64,
    pub tail_mean: f64,
    pub tail_var: f64,
    pub max_estimate: f64,
}

pub fn summarize_levels(record: &RunRecord, stairs: &StaircaseSpec, tail: usize) -> Vec<LevelSummary> {
    let mut out = Vec::new();
    for (l, &level) in stairs.levels.iter().enumerate() {
        let end = (l + 1) * stairs.steps_per_level;
        if end > record.train_estimates.len() {
            break;
        }
        let start = end - tail.min(stairs.steps_per_level);
        let vals = &record.train_estimates[start..end];
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64;
        let level_vals = &record.train_estimates[l * stairs.steps_per_level..end];
        out.push(LevelSummary {
            level,
            smoothed_end: record.smoothed[end - 1],
            tail_mean: mean,
            tail_var: var,
            max_estimate: level_vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        });
    }
    out
}
