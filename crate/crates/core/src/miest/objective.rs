use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nncore::{sigmoid, softplus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    Mine,
    Smile,
    Infonce,
}

impl std::str::FromStr for ObjectiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mine" => Ok(ObjectiveKind::Mine),
            "smile" => Ok(ObjectiveKind::Smile),
            "infonce" => Ok(ObjectiveKind::Infonce),
            other => Err(Error::Config(format!("unknown objective {other:?}"))),
        }
    }
}

/// Value of a bound on one score matrix, the differentiable surrogate that
/// training ascends, and the gradient of that surrogate with respect to the
/// scores. For InfoNCE the surrogate is the estimate itself.
#[derive(Debug, Clone)]
pub struct ObjectiveOutput {
    pub estimate: f64,
    pub surrogate: f64,
    pub grad: Array2<f64>,
}

fn check(scores: &ArrayView2<f64>) -> Result<usize> {
    let (n, m) = scores.dim();
    if n != m || n < 2 {
        return Err(Error::shape(format!("score matrix must be square with n ≥ 2, got {n}×{m}")));
    }
    if scores.iter().any(|v| v.is_nan()) {
        return Err(Error::domain("score matrix contains NaN"));
    }
    Ok(n)
}

fn mean_diag(s: &ArrayView2<f64>) -> f64 {
    s.diag().sum() / s.nrows() as f64
}

/// ln of the mean of e^{clamp(s_ij)} over off-diagonal entries, computed with
/// the max-shift trick. An infinite `tau` leaves scores unclamped.
fn log_mean_exp_offdiag(s: &ArrayView2<f64>, tau: f64) -> f64 {
    let n = s.nrows();
    let clamp = |v: f64| v.clamp(-tau, tau);
    let mut max = f64::NEG_INFINITY;
    for ((i, j), &v) in s.indexed_iter() {
        if i != j {
            max = max.max(clamp(v));
        }
    }
    let mut acc = 0.0;
    for ((i, j), &v) in s.indexed_iter() {
        if i != j {
            acc += (clamp(v) - max).exp();
        }
    }
    max + (acc / (n * (n - 1)) as f64).ln()
}

/// Donsker-Varadhan value mean(diag) − ln mean_offdiag e^{clip(s, ±τ)}.
/// `tau = ∞` is the MINE estimate; finite `tau` is the SMILE estimate.
pub fn clipped_dv(scores: ArrayView2<f64>, tau: f64) -> Result<f64> {
    check(&scores)?;
    Ok(mean_diag(&scores) - log_mean_exp_offdiag(&scores, tau))
}

/// MINE. The gradient of the log-partition term is divided by a running
/// (EMA) estimate of the partition instead of the batch value, which removes
/// most of the minibatch bias. `ema_log` is ln of that running mean and is
/// updated in place; pass `None` state to use the batch value.
pub fn mine_objective(scores: ArrayView2<f64>, ema_log: Option<&mut Option<f64>>, ema_rate: f64) -> Result<ObjectiveOutput> {
    let n = check(&scores)?;
    let log_mean = log_mean_exp_offdiag(&scores, f64::INFINITY);
    let estimate = mean_diag(&scores) - log_mean;
    let denom_log = match ema_log {
        Some(state) => {
            let updated = match *state {
                None => log_mean,
                Some(prev) => log_add_exp(ema_rate.ln() + prev, (1.0 - ema_rate).ln() + log_mean),
            };
            *state = Some(updated);
            updated
        }
        None => log_mean,
    };
    let m = (n * (n - 1)) as f64;
    let mut grad = Array2::zeros((n, n));
    let mut partition = 0.0;
    for ((i, j), &v) in scores.indexed_iter() {
        if i == j {
            grad[[i, j]] = 1.0 / n as f64;
        } else {
            let w = (v - denom_log).exp() / m;
            partition += w;
            grad[[i, j]] = -w;
        }
    }
    if !estimate.is_finite() {
        return Err(Error::domain("MINE estimate is not finite"));
    }
    Ok(ObjectiveOutput {
        estimate,
        surrogate: mean_diag(&scores) - partition,
        grad,
    })
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// SMILE. The estimate is the clipped DV value; the training signal is the
/// Jensen-Shannon f-GAN bound on the same scores, whose optimum critic has
/// the same density-ratio form but trains stably.
pub fn smile_objective(scores: ArrayView2<f64>, tau: f64) -> Result<ObjectiveOutput> {
    let n = check(&scores)?;
    if !(tau > 0.0) {
        return Err(Error::domain(format!("tau must be positive, got {tau}")));
    }
    let estimate = clipped_dv(scores, tau)?;
    let nf = n as f64;
    let m = nf * (nf - 1.0);
    let mut first = 0.0;
    let mut second = 0.0;
    let mut grad = Array2::zeros((n, n));
    for ((i, j), &v) in scores.indexed_iter() {
        if i == j {
            first -= softplus(-v) / nf;
            grad[[i, j]] = sigmoid(-v) / nf;
        } else {
            second += softplus(v) / m;
            grad[[i, j]] = -sigmoid(v) / m;
        }
    }
    Ok(ObjectiveOutput {
        estimate,
        surrogate: first - second,
        grad,
    })
}

/// InfoNCE (1/n) Σᵢ [s_ii − ln((1/n) Σⱼ e^{s_ij})], bounded above by ln n.
pub fn infonce_objective(scores: ArrayView2<f64>) -> Result<ObjectiveOutput> {
    let n = check(&scores)?;
    let nf = n as f64;
    let mut total = 0.0;
    let mut grad = Array2::zeros((n, n));
    for (i, row) in scores.rows().into_iter().enumerate() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = row.iter().map(|v| (v - max).exp()).sum();
        let lse = max + z.ln();
        total += row[i] - lse + nf.ln();
        for (j, &v) in row.iter().enumerate() {
            let p = (v - lse).exp();
            grad[[i, j]] = (if i == j { 1.0 } else { 0.0 } - p) / nf;
        }
    }
    let estimate = total / nf;
    Ok(ObjectiveOutput {
        estimate,
        surrogate: estimate,
        grad,
    })
}

/// Stateful wrapper carrying the MINE running mean across steps.
#[derive(Debug, Clone)]
pub struct Objective {
    pub kind: ObjectiveKind,
    /// Clip for SMILE; `None` means no clipping.
    pub tau: Option<f64>,
    pub ema_rate: f64,
    ema_log: Option<f64>,
}

impl Objective {
    pub fn new(kind: ObjectiveKind, tau: Option<f64>, ema_rate: f64) -> Self {
        Objective {
            kind,
            tau,
            ema_rate,
            ema_log: None,
        }
    }

    fn tau_value(&self) -> f64 {
        self.tau.unwrap_or(f64::INFINITY)
    }

    /// Estimate and gradient for a training step.
    pub fn train_step(&mut self, scores: ArrayView2<f64>) -> Result<ObjectiveOutput> {
        match self.kind {
            ObjectiveKind::Mine => mine_objective(scores, Some(&mut self.ema_log), self.ema_rate),
            ObjectiveKind::Smile => smile_objective(scores, self.tau_value()),
            ObjectiveKind::Infonce => infonce_objective(scores),
        }
    }

    /// Estimate only; does not touch the running state.
    pub fn estimate(&self, scores: ArrayView2<f64>) -> Result<f64> {
        match self.kind {
            ObjectiveKind::Mine => clipped_dv(scores, f64::INFINITY),
            ObjectiveKind::Smile => clipped_dv(scores, self.tau_value()),
            ObjectiveKind::Infonce => Ok(infonce_objective(scores)?.estimate),
        }
    }
}
