use ndarray::{s, Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Diagonal Gaussian posteriors for a batch: one row per datum.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPosterior {
    pub mu: Array2<f64>,
    pub log_var: Array2<f64>,
}

impl GaussianPosterior {
    /// Splits a network output of width 2k into mean (first k columns) and
    /// log-variance (last k columns).
    pub fn from_head(out: ArrayView2<f64>) -> Result<Self> {
        if out.ncols() % 2 != 0 {
            return Err(Error::shape(format!("gaussian head width {} is odd", out.ncols())));
        }
        let k = out.ncols() / 2;
        Ok(GaussianPosterior {
            mu: out.slice(s![.., ..k]).to_owned(),
            log_var: out.slice(s![.., k..]).to_owned(),
        })
    }

    pub fn dim(&self) -> usize {
        self.mu.ncols()
    }

    /// Joins gradients for μ and log-variance back into head layout.
    pub fn head_gradient(d_mu: &Array2<f64>, d_log_var: &Array2<f64>) -> Array2<f64> {
        ndarray::concatenate(Axis(1), &[d_mu.view(), d_log_var.view()]).expect("equal rows")
    }
}

/// KL(q‖N(0, I)) per datum and its gradients with respect to μ and log-variance.
#[derive(Debug, Clone)]
pub struct KlOutput {
    pub per_datum: Array1<f64>,
    pub d_mu: Array2<f64>,
    pub d_log_var: Array2<f64>,
}

/// ½ Σ (e^{lv} + μ² − 1 − lv), the closed form of ½[tr Σ + ‖μ‖² − k − ln det Σ].
pub fn kl_standard_normal(post: &GaussianPosterior) -> Result<KlOutput> {
    if post.mu.iter().chain(post.log_var.iter()).any(|v| !v.is_finite()) {
        return Err(Error::domain("posterior has non-finite entries"));
    }
    let var = post.log_var.mapv(f64::exp);
    let terms = &var + &post.mu.mapv(|m| m * m) - 1.0 - &post.log_var;
    Ok(KlOutput {
        per_datum: terms.sum_axis(Axis(1)) * 0.5,
        d_mu: post.mu.clone(),
        d_log_var: (var - 1.0) * 0.5,
    })
}

/// z = μ + e^{lv/2} ⊙ η. The returned `std` lets callers chain the gradient:
/// dL/dμ = dL/dz and dL/dlv = ½ dL/dz ⊙ std ⊙ η.
pub fn reparameterize(post: &GaussianPosterior, eta: ArrayView2<f64>) -> Result<(Array2<f64>, Array2<f64>)> {
    if eta.dim() != post.mu.dim() {
        return Err(Error::shape("noise and posterior shapes differ"));
    }
    let std = post.log_var.mapv(|lv| (0.5 * lv).exp());
    let z = &post.mu + &(&std * &eta);
    Ok((z, std))
}
