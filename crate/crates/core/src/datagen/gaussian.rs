use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{DataMatrixPair, Provenance};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Componentwise-correlated Gaussian pair: X_i and Y_i have correlation
/// `rho[i]`, all other pairs are independent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPairSpec {
    pub k: usize,
    pub rho: Vec<f64>,
    pub n: usize,
    pub seed: u64,
}

impl GaussianPairSpec {
    pub fn uniform(k: usize, target_mi: f64, n: usize, seed: u64) -> Self {
        GaussianPairSpec {
            k,
            rho: rho_for_target_mi(k, target_mi),
            n,
            seed,
        }
    }
}

/// Mutual information −½ Σ ln(1 − ρᵢ²) in nats.
pub fn gaussian_mi(rho: &[f64]) -> f64 {
    rho.iter().map(|r| -0.5 * (1.0 - r * r).ln()).sum()
}

/// Uniform per-component correlation giving `target_mi` nats over `k`
/// components.
pub fn rho_for_target_mi(k: usize, target_mi: f64) -> Vec<f64> {
    let per = target_mi.max(0.0) / k.max(1) as f64;
    let rho = (-(-2.0 * per).exp_m1()).sqrt();
    vec![rho; k]
}

fn check_rho(rho: &[f64]) -> Result<()> {
    for (i, &r) in rho.iter().enumerate() {
        if !(0.0..1.0).contains(&r) {
            return Err(Error::domain(format!("rho[{i}] = {r} outside [0, 1)")));
        }
    }
    Ok(())
}

/// Draws `n` samples of the correlated pair, padding with `extra` independent
/// noise columns per view. Returns the matrices only.
fn draw(rho: &[f64], extra: usize, n: usize, seed: u64) -> (Array2<f64>, Array2<f64>) {
    let dim = rho.len() + extra;
    let mut rng = rng_from_seed(seed);
    let mut x = Array2::zeros((n, dim));
    let mut y = Array2::zeros((n, dim));
    for t in 0..n {
        for i in 0..dim {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            let r = rho.get(i).copied().unwrap_or(0.0);
            x[[t, i]] = a;
            y[[t, i]] = r * a + (1.0 - r * r).sqrt() * b;
        }
    }
    (x, y)
}

pub fn generate_gaussian_pair(spec: &GaussianPairSpec) -> Result<DataMatrixPair> {
    if spec.rho.len() != spec.k {
        return Err(Error::shape(format!("rho has {} entries, k = {}", spec.rho.len(), spec.k)));
    }
    check_rho(&spec.rho)?;
    let (x, y) = draw(&spec.rho, 0, spec.n, spec.seed);
    Ok(DataMatrixPair {
        x,
        y,
        provenance: Provenance::new(
            "gaussian",
            vec![spec.seed],
            serde_json::to_value(spec).unwrap_or_default(),
        ),
        true_mi: Some(gaussian_mi(&spec.rho)),
        shared_latent: None,
    })
}

/// `ambient_dim`-dimensional Gaussian pair whose `total_mi` is split equally
/// over the first `k_signal` components; the remaining components are noise.
pub fn spread_information_pair(
    ambient_dim: usize,
    k_signal: usize,
    total_mi: f64,
    n: usize,
    seed: u64,
) -> Result<DataMatrixPair> {
    if k_signal > ambient_dim {
        return Err(Error::domain(format!("k_signal {k_signal} exceeds ambient dimension {ambient_dim}")));
    }
    if !(total_mi.is_finite() && total_mi >= 0.0) {
        return Err(Error::domain(format!("total_mi {total_mi} must be finite and non-negative")));
    }
    if k_signal == 0 && total_mi > 0.0 {
        return Err(Error::domain("positive information needs at least one signal component"));
    }
    let rho = rho_for_target_mi(k_signal, total_mi);
    if rho.iter().any(|&r| r >= 1.0) {
        return Err(Error::domain(format!(
            "{total_mi} nats over {k_signal} components needs a correlation of 1"
        )));
    }
    let (x, y) = draw(&rho, ambient_dim - k_signal, n, seed);
    Ok(DataMatrixPair {
        x,
        y,
        provenance: Provenance::new(
            "spread",
            vec![seed],
            serde_json::json!({ "ambient_dim": ambient_dim, "k_signal": k_signal, "total_mi": total_mi, "n": n }),
        ),
        true_mi: Some(gaussian_mi(&rho)),
        shared_latent: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cross_correlation;

    #[test]
    fn inversion_round_trips() {
        assert_eq!(rho_for_target_mi(10, 0.0), vec![0.0; 10]);
        let r = rho_for_target_mi(10, 10.0)[0];
        assert!((r - (1.0 - (-2.0f64).exp()).sqrt()).abs() < 1e-15);
        assert!((r - 0.9298).abs() < 1e-4);
        let mi_09 = -0.5 * (0.19f64).ln();
        assert!((mi_09 - 0.8304).abs() < 1e-4);
        assert!((rho_for_target_mi(1, mi_09)[0] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn metadata_is_closed_form() {
        let spec = GaussianPairSpec { k: 2, rho: vec![0.0, 0.9], n: 10, seed: 1 };
        let pair = generate_gaussian_pair(&spec).unwrap();
        assert_eq!(pair.true_mi, Some(-0.5 * (1.0 - 0.81f64).ln()));
        let zero = GaussianPairSpec { k: 3, rho: vec![0.0; 3], n: 10, seed: 1 };
        assert_eq!(generate_gaussian_pair(&zero).unwrap().true_mi, Some(0.0));
    }

    #[test]
    fn rho_of_one_is_rejected() {
        let spec = GaussianPairSpec { k: 1, rho: vec![1.0], n: 10, seed: 1 };
        assert!(matches!(generate_gaussian_pair(&spec), Err(Error::Domain(_))));
    }

    #[test]
    fn empirical_correlation_matches_rho() {
        let spec = GaussianPairSpec { k: 2, rho: vec![0.3, 0.8], n: 20_000, seed: 4 };
        let pair = generate_gaussian_pair(&spec).unwrap();
        let c = cross_correlation(pair.x.view(), pair.y.view()).unwrap();
        assert!((c[[0, 0]] - 0.3).abs() < 0.03);
        assert!((c[[1, 1]] - 0.8).abs() < 0.03);
        assert!(c[[0, 1]].abs() < 0.03);
    }

    #[test]
    fn spread_single_component() {
        let pair = spread_information_pair(16, 1, 10f64.ln(), 100, 2).unwrap();
        assert_eq!(pair.x.ncols(), 16);
        assert!((pair.true_mi.unwrap() - 10f64.ln()).abs() < 1e-12);
        let r = rho_for_target_mi(1, 10f64.ln())[0];
        assert!((r - 0.99499).abs() < 1e-5);
        assert!(spread_information_pair(4, 5, 1.0, 10, 0).is_err());
        assert!(spread_information_pair(4, 0, 1.0, 10, 0).is_err());
        assert!(spread_information_pair(4, 1, 400.0, 10, 0).is_err());
    }
}
