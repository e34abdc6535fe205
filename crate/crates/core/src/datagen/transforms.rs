use ndarray::{concatenate, Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use super::DataMatrixPair;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

/// Keeps X and replaces Y by Y³ elementwise. The map is invertible, so the
/// mutual information metadata is unchanged.
pub fn apply_cubic(pair: &DataMatrixPair) -> DataMatrixPair {
    DataMatrixPair {
        x: pair.x.clone(),
        y: pair.y.mapv(|v| v * v * v),
        provenance: pair.provenance.then("cubic", &[]),
        true_mi: pair.true_mi,
        shared_latent: pair.shared_latent.clone(),
    }
}

/// Concatenates `copies` copies of each view column-wise.
pub fn replicate_embed(pair: &DataMatrixPair, copies: usize) -> Result<DataMatrixPair> {
    if copies == 0 {
        return Err(Error::domain("copies must be at least 1"));
    }
    let rep = |a: &Array2<f64>| {
        let views: Vec<ArrayView2<f64>> = (0..copies).map(|_| a.view()).collect();
        concatenate(Axis(1), &views).expect("equal row counts")
    };
    Ok(DataMatrixPair {
        x: rep(&pair.x),
        y: rep(&pair.y),
        provenance: pair.provenance.then(&format!("replicate{copies}"), &[]),
        true_mi: pair.true_mi,
        shared_latent: pair.shared_latent.clone(),
    })
}

/// Frozen one-hidden-layer network `sigmoid(x W1 + b1) W2 + b2`, with the
/// usual uniform ±1/√fan_in initialization for weights and biases.
#[derive(Debug, Clone)]
pub struct RandomFeatureTeacher {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

impl RandomFeatureTeacher {
    pub fn new(input: usize, hidden: usize, output: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let b_in = 1.0 / (input.max(1) as f64).sqrt();
        let b_hid = 1.0 / (hidden.max(1) as f64).sqrt();
        let w1 = Array2::from_shape_simple_fn((input, hidden), || rng.random_range(-b_in..=b_in));
        let b1 = Array1::from_shape_simple_fn(hidden, || rng.random_range(-b_in..=b_in));
        let w2 = Array2::from_shape_simple_fn((hidden, output), || rng.random_range(-b_hid..=b_hid));
        let b2 = Array1::from_shape_simple_fn(output, || rng.random_range(-b_hid..=b_hid));
        RandomFeatureTeacher { w1, b1, w2, b2 }
    }

    pub fn apply(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut h = x.dot(&self.w1) + &self.b1;
        h.mapv_inplace(crate::nncore::sigmoid);
        h.dot(&self.w2) + &self.b2
    }
}

/// Passes each view through its own frozen random teacher network.
pub fn random_features_embed(pair: &DataMatrixPair, out_dim: usize, hidden: usize, seed: u64) -> Result<DataMatrixPair> {
    if out_dim == 0 || hidden == 0 {
        return Err(Error::domain("out_dim and hidden must be positive"));
    }
    let tx = RandomFeatureTeacher::new(pair.x.ncols(), hidden, out_dim, derive_seed(seed, &[0]));
    let ty = RandomFeatureTeacher::new(pair.y.ncols(), hidden, out_dim, derive_seed(seed, &[1]));
    Ok(DataMatrixPair {
        x: tx.apply(pair.x.view()),
        y: ty.apply(pair.y.view()),
        provenance: pair.provenance.then("random_features", &[seed]),
        true_mi: pair.true_mi,
        shared_latent: pair.shared_latent.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_gaussian_pair, GaussianPairSpec};
    use ndarray::s;

    fn pair() -> DataMatrixPair {
        generate_gaussian_pair(&GaussianPairSpec { k: 3, rho: vec![0.5; 3], n: 40, seed: 9 }).unwrap()
    }

    #[test]
    fn cubic_is_elementwise() {
        let mut p = pair();
        p.y[[0, 0]] = 2.0;
        p.y[[0, 1]] = 0.0;
        let c = apply_cubic(&p);
        assert_eq!(c.y[[0, 0]], 8.0);
        assert_eq!(c.y[[0, 1]], 0.0);
        assert_eq!(c.x, p.x);
        assert_eq!(c.true_mi, p.true_mi);
    }

    #[test]
    fn replication_duplicates_columns() {
        let p = pair();
        assert_eq!(replicate_embed(&p, 1).unwrap().x, p.x);
        let r = replicate_embed(&p, 4).unwrap();
        assert_eq!(r.x.ncols(), 12);
        for c in 0..4 {
            assert_eq!(r.y.slice(s![.., 3 * c..3 * c + 3]), p.y);
        }
        assert_eq!(r.true_mi, p.true_mi);
        assert!(replicate_embed(&p, 0).is_err());
    }

    #[test]
    fn teacher_is_deterministic() {
        let p = pair();
        let a = random_features_embed(&p, 7, 32, 5).unwrap();
        let b = random_features_embed(&p, 7, 32, 5).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.x.ncols(), 7);
        assert_ne!(a.x, random_features_embed(&p, 7, 32, 6).unwrap().x);
    }

    #[test]
    fn teacher_init_bounds() {
        let t = RandomFeatureTeacher::new(16, 64, 4, 1);
        assert!(t.w1.iter().all(|w| w.abs() <= 0.25));
        assert!(t.w2.iter().all(|w| w.abs() <= 0.125));
    }
}
