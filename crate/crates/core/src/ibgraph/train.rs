use ndarray::Axis;
use serde::{Deserialize, Serialize};

use super::compile::{CompiledLoss, NodeData};
use crate::error::{Error, Result};
use crate::nncore::AdamState;
use crate::rng::{derive_seed, permutation, rng_from_seed};

/// Batch variance of μ below which a latent counts as collapsed.
pub const COLLAPSE_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompositeConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    /// MINE denominator running-average rate.
    pub ema_rate: f64,
    /// A step loss more than `spike_sigmas` standard deviations above the
    /// mean of the previous `spike_window` steps is logged as a spike.
    pub spike_window: usize,
    pub spike_sigmas: f64,
}

impl Default for CompositeConfig {
    fn default() -> Self {
        CompositeConfig {
            epochs: 100,
            batch_size: 128,
            lr: 1e-4,
            seed: 0,
            ema_rate: 0.99,
            spike_window: 50,
            spike_sigmas: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_loss: f64,
    /// First MINE term on each split, when the graph has one.
    pub train_mi: Option<f64>,
    pub test_mi: Option<f64>,
    /// Smallest per-latent batch variance of μ on the test split.
    pub min_mu_variance: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CompositeRecord {
    pub step_loss: Vec<f64>,
    pub epochs: Vec<EpochStats>,
    pub spikes: Vec<usize>,
    pub collapsed: bool,
    pub collapse_reason: Option<String>,
}

impl CompositeRecord {
    /// CSV `epoch,train_mi,test_mi,train_loss,test_loss`.
    pub fn mi_trace_csv(&self) -> String {
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = String::from("epoch,train_mi,test_mi,train_loss,test_loss\n");
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.epoch,
                fmt(e.train_mi),
                fmt(e.test_mi),
                e.train_loss,
                e.test_loss
            ));
        }
        out
    }
}

/// Rows `idx` of every node.
pub fn select_rows(data: &NodeData, idx: &[usize]) -> NodeData {
    data.iter().map(|(k, v)| (k.clone(), v.select(Axis(0), idx))).collect()
}

fn rows(data: &NodeData) -> Result<usize> {
    let mut it = data.values().map(|m| m.nrows());
    let n = it.next().ok_or_else(|| Error::Config("no data".into()))?;
    if it.any(|m| m != n) {
        return Err(Error::shape("observed nodes have different sample counts"));
    }
    Ok(n)
}

/// Mean loss, mean MINE value and minimum μ variance over consecutive
/// batches, with noise from a fixed stream so evaluations are comparable.
pub fn evaluate_split(loss: &CompiledLoss, data: &NodeData, batch: usize, seed: u64) -> Result<(f64, Option<f64>, f64)> {
    let n = rows(data)?;
    let batch = batch.min(n);
    let chunks = (n / batch).max(1);
    let mut rng = rng_from_seed(seed);
    let mine = loss.mine_term();
    let (mut total, mut mi, mut min_var) = (0.0, 0.0, f64::INFINITY);
    for c in 0..chunks {
        let idx: Vec<usize> = (c * batch..(c + 1) * batch).collect();
        let b = select_rows(data, &idx);
        let noise = loss.draw_noise(batch, &mut rng);
        let v = loss.evaluate(&b, &noise)?;
        total += v.total;
        if let Some(t) = mine {
            mi += v.terms[t];
        }
        for &var in v.mu_variance.values() {
            min_var = min_var.min(var);
        }
    }
    let c = chunks as f64;
    Ok((total / c, mine.map(|_| mi / c), min_var))
}

/// Trains every network of `loss` with Adam and records per-epoch losses,
/// the I(Zx;Zy) trace, loss spikes, and representation collapse.
pub fn train_composite(loss: &mut CompiledLoss, train: &NodeData, test: &NodeData, cfg: &CompositeConfig) -> Result<CompositeRecord> {
    if cfg.batch_size < 2 {
        return Err(Error::Config("batch size must be at least 2".into()));
    }
    let n = rows(train)?;
    rows(test)?;
    if n < cfg.batch_size {
        return Err(Error::Config(format!("{n} training rows is fewer than the batch size {}", cfg.batch_size)));
    }
    let mut adam = AdamState::new(cfg.lr);
    let mut shuffle = rng_from_seed(derive_seed(cfg.seed, &[0]));
    let mut noise_rng = rng_from_seed(derive_seed(cfg.seed, &[1]));
    let eval_seed = derive_seed(cfg.seed, &[2]);
    let mut record = CompositeRecord::default();
    let batches = n / cfg.batch_size;

    'outer: for epoch in 0..cfg.epochs {
        let order = permutation(&mut shuffle, n);
        for b in 0..batches {
            let batch = select_rows(train, &order[b * cfg.batch_size..(b + 1) * cfg.batch_size]);
            let noise = loss.draw_noise(cfg.batch_size, &mut noise_rng);
            let step = loss
                .training_grad(&batch, &noise, cfg.ema_rate)
                .and_then(|(v, g)| {
                    let slices: Vec<&[f64]> = g.iter().map(|s| s.as_slice()).collect();
                    adam.update(loss.params_mut(), &slices)?;
                    Ok(v)
                });
            let v = match step {
                Ok(v) if v.total.is_finite() => v,
                Ok(v) => {
                    record.collapsed = true;
                    record.collapse_reason = Some(format!("non-finite loss {} at step {}", v.total, record.step_loss.len()));
                    break 'outer;
                }
                Err(e) => {
                    record.collapsed = true;
                    record.collapse_reason = Some(e.to_string());
                    break 'outer;
                }
            };
            let s = record.step_loss.len();
            if s >= cfg.spike_window {
                let w = &record.step_loss[s - cfg.spike_window..];
                let m = w.iter().sum::<f64>() / w.len() as f64;
                let sd = (w.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / w.len() as f64).sqrt();
                if v.total > m + cfg.spike_sigmas * sd.max(1e-12) {
                    record.spikes.push(s);
                }
            }
            record.step_loss.push(v.total);
        }
        let (train_loss, train_mi, _) = evaluate_split(loss, train, cfg.batch_size, eval_seed)?;
        let (test_loss, test_mi, min_var) = evaluate_split(loss, test, cfg.batch_size, eval_seed)?;
        record.epochs.push(EpochStats { epoch: epoch + 1, train_loss, test_loss, train_mi, test_mi, min_mu_variance: min_var });
        if min_var < COLLAPSE_THRESHOLD {
            record.collapsed = true;
            record.collapse_reason = Some(format!("representation collapse at epoch {}: var(μ) = {min_var:e}", epoch + 1));
        }
    }
    Ok(record)
}
