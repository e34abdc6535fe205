//! Feed-forward networks with hand-written reverse-mode gradients, Adam, and
//! diagonal Gaussian heads.

mod adam;
mod gaussian;
mod mlp;

use serde::{Deserialize, Serialize};

pub use adam::AdamState;
pub use gaussian::{kl_standard_normal, reparameterize, GaussianPosterior, KlOutput};
pub use mlp::{Dense, Mlp, MlpGrads, Tape, CHECKPOINT_FORMAT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Linear,
}

impl Activation {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::Sigmoid => sigmoid(v),
            Activation::Linear => v,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    /// The relu derivative at exactly zero is taken to be zero.
    pub fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Linear => 1.0,
        }
    }
}

/// Logistic function evaluated without overflow for large |v|.
pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + eᵛ) without overflow.
pub fn softplus(v: f64) -> f64 {
    if v > 0.0 {
        v + (-v).exp().ln_1p()
    } else {
        v.exp().ln_1p()
    }
}
