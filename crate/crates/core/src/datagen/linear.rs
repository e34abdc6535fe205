use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{DataMatrixPair, Provenance};
use crate::error::{Error, Result};
use crate::linalg::scale_columns;
use crate::rng::{normal_matrix, rng_from_seed};

/// Parameters of the linear self/shared signal model.
///
/// Each view is `R + U V + P Q`: white noise, a view-private (self) signal of
/// rank `m_self`, and a shared signal of rank `m_shared` whose latent `P` is
/// common to both views.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModelSpec {
    pub n_x: usize,
    pub n_y: usize,
    pub t: usize,
    pub m_shared: usize,
    pub m_self_x: usize,
    pub m_self_y: usize,
    pub sigma2_r_x: f64,
    pub sigma2_r_y: f64,
    pub sigma2_u_x: f64,
    pub sigma2_u_y: f64,
    pub sigma2_v_x: f64,
    pub sigma2_v_y: f64,
    pub sigma2_p: f64,
    pub sigma2_q_x: f64,
    pub sigma2_q_y: f64,
    pub seed_projections: u64,
    pub seed_samples: u64,
}

impl LinearModelSpec {
    /// Symmetric spec from signal-to-noise ratios. Noise and projection
    /// variances are fixed at 1, so σ²_U = γ_self and σ²_P = γ_shared.
    #[allow(clippy::too_many_arguments)]
    pub fn from_snr(
        n: usize,
        t: usize,
        m_shared: usize,
        m_self: usize,
        gamma_self: f64,
        gamma_shared: f64,
        seed_projections: u64,
        seed_samples: u64,
    ) -> Self {
        LinearModelSpec {
            n_x: n,
            n_y: n,
            t,
            m_shared,
            m_self_x: m_self,
            m_self_y: m_self,
            sigma2_r_x: 1.0,
            sigma2_r_y: 1.0,
            sigma2_u_x: gamma_self,
            sigma2_u_y: gamma_self,
            sigma2_v_x: 1.0,
            sigma2_v_y: 1.0,
            sigma2_p: gamma_shared,
            sigma2_q_x: 1.0,
            sigma2_q_y: 1.0,
            seed_projections,
            seed_samples,
        }
    }

    pub fn gamma_self_x(&self) -> f64 {
        self.sigma2_u_x * self.sigma2_v_x / self.sigma2_r_x
    }

    pub fn gamma_self_y(&self) -> f64 {
        self.sigma2_u_y * self.sigma2_v_y / self.sigma2_r_y
    }

    pub fn gamma_shared_x(&self) -> f64 {
        self.sigma2_p * self.sigma2_q_x / self.sigma2_r_x
    }

    pub fn gamma_shared_y(&self) -> f64 {
        self.sigma2_p * self.sigma2_q_y / self.sigma2_r_y
    }

    /// Expected variance of one column of X̃ before standardization.
    pub fn expected_column_variance_x(&self) -> f64 {
        self.sigma2_r_x
            + self.m_self_x as f64 * self.sigma2_u_x * self.sigma2_v_x
            + self.m_shared as f64 * self.sigma2_p * self.sigma2_q_x
    }

    pub fn expected_column_variance_y(&self) -> f64 {
        self.sigma2_r_y
            + self.m_self_y as f64 * self.sigma2_u_y * self.sigma2_v_y
            + self.m_shared as f64 * self.sigma2_p * self.sigma2_q_y
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_x == 0 || self.n_y == 0 || self.t == 0 {
            return Err(Error::domain("n_x, n_y and t must be positive"));
        }
        let vars = [
            self.sigma2_r_x,
            self.sigma2_r_y,
            self.sigma2_u_x,
            self.sigma2_u_y,
            self.sigma2_v_x,
            self.sigma2_v_y,
            self.sigma2_p,
            self.sigma2_q_x,
            self.sigma2_q_y,
        ];
        if vars.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::domain("variances must be finite and non-negative"));
        }
        for (view, var) in [("x", self.expected_column_variance_x()), ("y", self.expected_column_variance_y())] {
            if !(var > 0.0) {
                return Err(Error::domain(format!("view {view} has no noise, self or shared variance")));
            }
        }
        Ok(())
    }
}

/// A linear model with its quenched projection matrices drawn once.
#[derive(Debug, Clone)]
pub struct LinearModel {
    pub spec: LinearModelSpec,
    pub v_x: Array2<f64>,
    pub v_y: Array2<f64>,
    pub q_x: Array2<f64>,
    pub q_y: Array2<f64>,
}

impl LinearModel {
    pub fn new(spec: LinearModelSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = rng_from_seed(spec.seed_projections);
        let v_x = normal_matrix(&mut rng, spec.m_self_x, spec.n_x, spec.sigma2_v_x);
        let v_y = normal_matrix(&mut rng, spec.m_self_y, spec.n_y, spec.sigma2_v_y);
        let q_x = normal_matrix(&mut rng, spec.m_shared, spec.n_x, spec.sigma2_q_x);
        let q_y = normal_matrix(&mut rng, spec.m_shared, spec.n_y, spec.sigma2_q_y);
        Ok(LinearModel { spec, v_x, v_y, q_x, q_y })
    }

    /// Draws one realization of noise and latents and standardizes columns.
    pub fn sample(&self, seed_samples: u64) -> Result<DataMatrixPair> {
        let (mut x, mut y, p) = self.sample_raw(seed_samples);
        scale_columns(&mut x, "x")?;
        scale_columns(&mut y, "y")?;
        let spec = &self.spec;
        Ok(DataMatrixPair {
            x,
            y,
            provenance: Provenance::new(
                "linear",
                vec![spec.seed_projections, seed_samples],
                serde_json::to_value(spec).unwrap_or_default(),
            ),
            true_mi: None,
            shared_latent: Some(p),
        })
    }

    /// Unstandardized X̃, Ỹ and the shared latent P.
    pub fn sample_raw(&self, seed_samples: u64) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
        let s = &self.spec;
        let mut rng = rng_from_seed(seed_samples);
        let p = normal_matrix(&mut rng, s.t, s.m_shared, s.sigma2_p);
        let mut x = normal_matrix(&mut rng, s.t, s.n_x, s.sigma2_r_x);
        let u_x = normal_matrix(&mut rng, s.t, s.m_self_x, s.sigma2_u_x);
        let mut y = normal_matrix(&mut rng, s.t, s.n_y, s.sigma2_r_y);
        let u_y = normal_matrix(&mut rng, s.t, s.m_self_y, s.sigma2_u_y);
        if s.m_self_x > 0 {
            x += &u_x.dot(&self.v_x);
        }
        if s.m_self_y > 0 {
            y += &u_y.dot(&self.v_y);
        }
        if s.m_shared > 0 {
            x += &p.dot(&self.q_x);
            y += &p.dot(&self.q_y);
        }
        (x, y, p)
    }
}

/// Builds the model from `spec` and draws the realization for `seed_samples`.
pub fn generate_linear_model(spec: &LinearModelSpec) -> Result<DataMatrixPair> {
    LinearModel::new(spec.clone())?.sample(spec.seed_samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{column_std, cross_correlation, singular_values};

    #[test]
    fn pure_noise_views_are_uncorrelated() {
        let spec = LinearModelSpec::from_snr(10, 4000, 0, 0, 0.0, 0.0, 1, 2);
        let pair = generate_linear_model(&spec).unwrap();
        let c = cross_correlation(pair.x.view(), pair.y.view()).unwrap();
        let bound = 3.0 / (4000f64).sqrt();
        let over = c.iter().filter(|v| v.abs() > bound).count();
        // 3 sigma per entry, 100 entries
        assert!(over <= 2, "{over} entries exceed {bound}");
    }

    #[test]
    fn columns_have_unit_std() {
        let spec = LinearModelSpec::from_snr(30, 200, 2, 3, 2.0, 1.0, 5, 6);
        let pair = generate_linear_model(&spec).unwrap();
        for s in column_std(pair.x.view()).iter().chain(column_std(pair.y.view()).iter()) {
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn shared_signal_dominates_cross_spectrum() {
        let spec = LinearModelSpec::from_snr(100, 1000, 1, 0, 0.0, 5.0, 11, 12);
        let pair = generate_linear_model(&spec).unwrap();
        let cxy = pair.x.t().dot(&pair.y) / 1000.0;
        let s = singular_values(cxy.view());
        assert!(s[0] > 5.0 * s[1], "leading {} vs bulk {}", s[0], s[1]);
    }

    #[test]
    fn raw_variance_matches_decomposition() {
        let spec = LinearModelSpec::from_snr(40, 10_000, 2, 3, 0.7, 1.3, 21, 22);
        let model = LinearModel::new(spec.clone()).unwrap();
        let (x, _, _) = model.sample_raw(22);
        let mean_var = column_std(x.view()).mapv(|s| s * s).mean().unwrap();
        // Averaging over columns also averages the quenched projections.
        let expected = spec.expected_column_variance_x();
        assert!((mean_var / expected - 1.0).abs() < 0.05, "{mean_var} vs {expected}");
    }

    #[test]
    fn projections_are_quenched_across_trials() {
        let spec = LinearModelSpec::from_snr(8, 50, 1, 1, 1.0, 1.0, 3, 4);
        let a = LinearModel::new(spec.clone()).unwrap();
        let b = LinearModel::new(LinearModelSpec { seed_samples: 99, ..spec }).unwrap();
        assert_eq!(a.q_x, b.q_x);
        assert_ne!(a.sample(4).unwrap().x, a.sample(5).unwrap().x);
        assert_eq!(a.sample(4).unwrap().x, a.sample(4).unwrap().x);
    }

    #[test]
    fn degenerate_spec_is_rejected() {
        let spec = LinearModelSpec::from_snr(8, 50, 0, 0, 0.0, 0.0, 3, 4);
        let spec = LinearModelSpec { sigma2_r_x: 0.0, ..spec };
        assert!(matches!(generate_linear_model(&spec), Err(Error::Domain(_))));
    }

    #[test]
    fn zero_noise_column_is_named() {
        // Only shared signal with one zero column in Q_X.
        let spec = LinearModelSpec {
            sigma2_r_x: 0.0,
            ..LinearModelSpec::from_snr(3, 20, 1, 0, 0.0, 1.0, 3, 4)
        };
        let mut model = LinearModel::new(spec).unwrap();
        model.q_x[[0, 2]] = 0.0;
        match model.sample(4) {
            Err(Error::ZeroVariance { matrix, column }) => {
                assert_eq!(matrix, "x");
                assert_eq!(column, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
