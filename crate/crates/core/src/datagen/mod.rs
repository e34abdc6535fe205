//! Synthetic data generators.
//!
//! Everything here is a pure function of its spec and seeds, so the same
//! inputs always reproduce bit-identical matrices.

mod gaussian;
mod linear;
mod pendulum;
mod transforms;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub use gaussian::{
    gaussian_mi, generate_gaussian_pair, rho_for_target_mi, spread_information_pair, GaussianPairSpec,
};
pub use linear::{generate_linear_model, LinearModel, LinearModelSpec};
pub use pendulum::{simulate_pendulum, wrap_angle, PendulumData, PendulumSpec, PendulumWindows};
pub use transforms::{apply_cubic, random_features_embed, replicate_embed, RandomFeatureTeacher};

/// Which generator produced a pair, with the seeds and parameters used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    pub seeds: Vec<u64>,
    pub params: serde_json::Value,
}

impl Provenance {
    pub fn new(generator: &str, seeds: Vec<u64>, params: serde_json::Value) -> Self {
        Provenance {
            generator: generator.to_string(),
            seeds,
            params,
        }
    }

    /// Appends a transform step to the generator description.
    pub(crate) fn then(&self, step: &str, seeds: &[u64]) -> Self {
        let mut p = self.clone();
        p.generator = format!("{}|{}", p.generator, step);
        p.seeds.extend_from_slice(seeds);
        p
    }
}

/// Paired T×N_X and T×N_Y sample matrices.
#[derive(Debug, Clone)]
pub struct DataMatrixPair {
    pub x: Array2<f64>,
    pub y: Array2<f64>,
    pub provenance: Provenance,
    /// Analytic mutual information in nats, when the generator knows it.
    pub true_mi: Option<f64>,
    /// Ground-truth shared latent P (T×m_shared) for the linear model.
    pub shared_latent: Option<Array2<f64>>,
}

impl DataMatrixPair {
    pub fn samples(&self) -> usize {
        self.x.nrows()
    }

    /// Row subset in the given order; metadata is carried over.
    pub fn select_rows(&self, rows: &[usize]) -> DataMatrixPair {
        DataMatrixPair {
            x: self.x.select(ndarray::Axis(0), rows),
            y: self.y.select(ndarray::Axis(0), rows),
            provenance: self.provenance.clone(),
            true_mi: self.true_mi,
            shared_latent: self
                .shared_latent
                .as_ref()
                .map(|p| p.select(ndarray::Axis(0), rows)),
        }
    }
}
