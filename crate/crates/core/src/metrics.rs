//! Reconstruction quality (RC, RC0, RC′), correlation-matrix Gaussian MI and
//! the latent-dimension diagnostic.

use ndarray::{concatenate, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindr::{self, Method, RccaConfig};
use crate::linalg::{column_std, cross_correlation, sym_eigen, zscore};
use crate::rng::{derive_seed, rng_from_seed, standard_normal_matrix};

/// Frobenius norm of the cross-correlation matrix between latent blocks,
/// i.e. √(Σσᵢ²) over its singular values.
pub fn total_correlation(z_x: ArrayView2<f64>, z_y: ArrayView2<f64>) -> Result<f64> {
    let c = cross_correlation(z_x, z_y).map_err(|e| match e {
        Error::ZeroVariance { matrix, column } => {
            Error::domain(format!("column {column} of {matrix} has zero variance"))
        }
        other => other,
    })?;
    Ok(c.iter().map(|v| v * v).sum::<f64>().sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RcReport {
    pub rc: f64,
    /// Mean of the pure-noise baseline over `trials` draws.
    pub rc0: f64,
    /// Per-draw standard deviation of the baseline.
    pub rc0_std: f64,
    /// Standard error of `rc0`, i.e. `rc0_std / √trials`.
    pub rc0_sem: f64,
    pub rc_prime: f64,
    pub m_shared_assumed: usize,
    pub trials: usize,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Noise baseline: total correlation between independent standard-normal
/// matrices of the given shapes, normalized by `m_shared`.
pub fn rc0_baseline(t: usize, k_x: usize, k_y: usize, m_shared: usize, trials: usize, seed: u64) -> Result<Vec<f64>> {
    (0..trials)
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(seed, &[i as u64]));
            let a = standard_normal_matrix(&mut rng, t, k_x);
            let b = standard_normal_matrix(&mut rng, t, k_y);
            Ok(total_correlation(a.view(), b.view())? / m_shared as f64)
        })
        .collect()
}

/// RC = total correlation / m_shared, RC0 its noise baseline, RC′ = RC − RC0.
pub fn rc_prime(z_x: ArrayView2<f64>, z_y: ArrayView2<f64>, m_shared: usize, trials: usize, seed: u64) -> Result<RcReport> {
    if m_shared == 0 {
        return Err(Error::domain("m_shared must be at least 1"));
    }
    if trials == 0 {
        return Err(Error::domain("trials must be at least 1"));
    }
    let rc = total_correlation(z_x, z_y)? / m_shared as f64;
    let base = rc0_baseline(z_x.nrows(), z_x.ncols(), z_y.ncols(), m_shared, trials, seed)?;
    let (rc0, rc0_std) = mean_std(&base);
    Ok(RcReport {
        rc,
        rc0,
        rc0_std,
        rc0_sem: rc0_std / (trials as f64).sqrt(),
        rc_prime: rc - rc0,
        m_shared_assumed: m_shared,
        trials,
    })
}

pub const DEFAULT_MI_THRESHOLD: f64 = 1e-8;

/// ln of the pseudo-determinant: sum of logs of eigenvalues above `threshold`.
fn log_pdet(c: ArrayView2<f64>, threshold: f64) -> f64 {
    let (vals, _) = sym_eigen(c);
    vals.iter().filter(|&&v| v > threshold).map(|v| v.ln()).sum()
}

/// Gaussian MI ½ ln(|C_XX||C_YY| / |C|) from the empirical correlation matrix
/// of the joint sample. Eigen-directions below `threshold` are discarded, so
/// redundant (for example replicated) columns are handled; constant columns
/// are dropped. The result is clamped at zero.
pub fn gaussian_mi_from_data(x: ArrayView2<f64>, y: ArrayView2<f64>, threshold: f64) -> Result<f64> {
    if x.nrows() != y.nrows() {
        return Err(Error::shape(format!("x has {} rows, y has {}", x.nrows(), y.nrows())));
    }
    if x.nrows() < 2 {
        return Err(Error::domain("at least two samples are needed"));
    }
    let keep = |a: ArrayView2<f64>| -> Array2<f64> {
        let sd = column_std(a);
        let max = sd.iter().cloned().fold(0.0_f64, f64::max);
        let cols: Vec<usize> = (0..a.ncols()).filter(|&j| sd[j] > 1e-12 * max && sd[j] > 0.0).collect();
        zscore(a.select(Axis(1), &cols).view())
    };
    let zx = keep(x);
    let zy = keep(y);
    if zx.ncols() == 0 || zy.ncols() == 0 {
        return Ok(0.0);
    }
    let t = x.nrows() as f64;
    let joint = concatenate(Axis(1), &[zx.view(), zy.view()]).expect("equal rows");
    let c = joint.t().dot(&joint) / t;
    let p = zx.ncols();
    let cxx = c.slice(ndarray::s![..p, ..p]);
    let cyy = c.slice(ndarray::s![p.., p..]);
    let mi = 0.5 * (log_pdet(cxx, threshold) + log_pdet(cyy, threshold) - log_pdet(c.view(), threshold));
    Ok(mi.max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiagnosticConfig {
    pub rcca: RccaConfig,
    /// Normalization used for RC; it rescales the curves but not their peaks.
    pub m_shared: usize,
    pub trials: usize,
    pub seed: u64,
}

impl Default for DiagnosticConfig {
    fn default() -> Self {
        DiagnosticConfig {
            rcca: RccaConfig::default(),
            m_shared: 1,
            trials: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub k: usize,
    pub rc_prime_pca: f64,
    pub rc_prime_rcca: f64,
    pub rc0: f64,
    pub rc0_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub rows: Vec<DiagnosticRow>,
    /// k maximizing RC′ for PCA; estimates m_shared + m_self.
    pub peak_pca: usize,
    /// k maximizing RC′ for rCCA; estimates m_shared.
    pub peak_rcca: usize,
}

fn argmax_k(rows: &[DiagnosticRow], f: impl Fn(&DiagnosticRow) -> f64) -> usize {
    rows.iter()
        .max_by(|a, b| f(a).total_cmp(&f(b)))
        .map(|r| r.k)
        .unwrap_or(0)
}

/// RC′ on held-out data as a function of latent dimension for independent
/// (PCA per view) and simultaneous (rCCA) reduction.
pub fn latent_dim_diagnostic(
    train: (ArrayView2<f64>, ArrayView2<f64>),
    test: (ArrayView2<f64>, ArrayView2<f64>),
    k_grid: &[usize],
    cfg: &DiagnosticConfig,
) -> Result<DiagnosticReport> {
    if k_grid.is_empty() || k_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("k_grid must be non-empty and strictly ascending"));
    }
    let mut rows = Vec::with_capacity(k_grid.len());
    for (i, &k) in k_grid.iter().enumerate() {
        let seed = derive_seed(cfg.seed, &[i as u64]);
        let mut rc = [0.0; 2];
        let mut base = (0.0, 0.0);
        for (j, method) in [Method::Pca, Method::Rcca].into_iter().enumerate() {
            let basis = lindr::fit(method, train.0, train.1, k, &cfg.rcca)?;
            let (zx, zy) = lindr::project(&basis, test.0, Some(test.1))?;
            let report = rc_prime(zx.view(), zy.expect("paired").view(), cfg.m_shared, cfg.trials, seed)?;
            rc[j] = report.rc_prime;
            base = (report.rc0, report.rc0_std);
        }
        rows.push(DiagnosticRow {
            k,
            rc_prime_pca: rc[0],
            rc_prime_rcca: rc[1],
            rc0: base.0,
            rc0_std: base.1,
        });
    }
    Ok(DiagnosticReport {
        peak_pca: argmax_k(&rows, |r| r.rc_prime_pca),
        peak_rcca: argmax_k(&rows, |r| r.rc_prime_rcca),
        rows,
    })
}

/// Affine least-squares map from features to targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearReadout {
    /// (features + 1) × targets; the last row is the intercept.
    pub coefficients: Array2<f64>,
}

impl LinearReadout {
    pub fn fit(features: ArrayView2<f64>, targets: ArrayView2<f64>) -> Result<Self> {
        if features.nrows() != targets.nrows() {
            return Err(Error::shape("features and targets have different sample counts"));
        }
        if features.nrows() <= features.ncols() {
            return Err(Error::Undersampled {
                what: "linear readout",
                samples: features.nrows(),
                dims: features.ncols() + 1,
            });
        }
        let ones = Array2::<f64>::ones((features.nrows(), 1));
        let design = concatenate(Axis(1), &[features.view(), ones.view()]).expect("equal rows");
        let a = crate::linalg::to_dmatrix(design.view());
        let b = crate::linalg::to_dmatrix(targets);
        let coef = a
            .svd(true, true)
            .solve(&b, 1e-12)
            .map_err(|e| Error::domain(format!("least squares failed: {e}")))?;
        Ok(LinearReadout { coefficients: crate::linalg::from_dmatrix(&coef) })
    }

    pub fn predict(&self, features: ArrayView2<f64>) -> Array2<f64> {
        let p = features.ncols();
        features.dot(&self.coefficients.slice(ndarray::s![..p, ..])) + &self.coefficients.row(p)
    }

    /// Pooled coefficient of determination 1 − SS_res / SS_tot over all
    /// target columns.
    pub fn r2(&self, features: ArrayView2<f64>, targets: ArrayView2<f64>) -> f64 {
        let pred = self.predict(features);
        let mean = targets.mean_axis(Axis(0)).expect("non-empty targets");
        let ss_res: f64 = (&targets - &pred).mapv(|v| v * v).sum();
        let ss_tot: f64 = (&targets - &mean).mapv(|v| v * v).sum();
        1.0 - ss_res / ss_tot
    }
}
