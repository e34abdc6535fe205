use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Activation;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "sdrkit-mlp-v1";

/// Fully connected layer `act(x W + b)` with `W` of shape in×out.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl Dense {
    /// Xavier-uniform weights in ±√(6/(in+out)), zero bias.
    pub fn xavier<R: Rng + ?Sized>(input: usize, output: usize, activation: Activation, rng: &mut R) -> Self {
        Dense::xavier_with_fan(input, output, input + output, activation, rng)
    }

    /// Xavier-uniform init with an explicit fan sum, for layers whose input
    /// block is split across several matrices.
    pub fn xavier_with_fan<R: Rng + ?Sized>(
        input: usize,
        output: usize,
        fan_sum: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let bound = (6.0 / fan_sum.max(1) as f64).sqrt();
        Dense {
            weight: Array2::from_shape_simple_fn((input, output), || rng.random_range(-bound..=bound)),
            bias: Array1::zeros(output),
            activation,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.ncols()
    }
}

/// Multi-layer perceptron.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Values recorded by [`Mlp::forward`]; consumed by [`Mlp::backward`].
#[derive(Debug)]
pub struct Tape {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    post: Vec<Array2<f64>>,
}

/// Gradients laid out like the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub weight: Vec<Array2<f64>>,
    pub bias: Vec<Array1<f64>>,
}

impl MlpGrads {
    pub fn zeros_like(net: &Mlp) -> Self {
        MlpGrads {
            weight: net.layers.iter().map(|l| Array2::zeros(l.weight.raw_dim())).collect(),
            bias: net.layers.iter().map(|l| Array1::zeros(l.bias.len())).collect(),
        }
    }

    /// Gradient buffers in the same order as [`Mlp::params_mut`].
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(2 * self.weight.len());
        for (w, b) in self.weight.iter().zip(&self.bias) {
            out.push(w.as_slice().expect("standard layout"));
            out.push(b.as_slice().expect("standard layout"));
        }
        out
    }

    pub fn add_assign(&mut self, other: &MlpGrads) {
        for (a, b) in self.weight.iter_mut().zip(&other.weight) {
            *a += b;
        }
        for (a, b) in self.bias.iter_mut().zip(&other.bias) {
            *a += b;
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    format: String,
    widths: Vec<usize>,
    activations: Vec<Activation>,
}

impl Mlp {
    /// Network with layer widths `widths[0] → … → widths[last]`, using
    /// `hidden` activations on every layer except the last, which uses
    /// `output`.
    pub fn new<R: Rng + ?Sized>(widths: &[usize], hidden: Activation, output: Activation, rng: &mut R) -> Self {
        assert!(widths.len() >= 2, "an MLP needs input and output widths");
        let n = widths.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let act = if i + 1 == n { output } else { hidden };
                Dense::xavier(widths[i], widths[i + 1], act, rng)
            })
            .collect();
        Mlp { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").output_dim()
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_dim()];
        w.extend(self.layers.iter().map(Dense::output_dim));
        w
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    /// Parameter buffers, weight then bias for each layer.
    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for l in &mut self.layers {
            out.push(l.weight.as_slice_mut().expect("standard layout"));
            out.push(l.bias.as_slice_mut().expect("standard layout"));
        }
        out
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::shape(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        Ok(())
    }

    /// Forward pass without recording intermediate values.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(&x)?;
        let mut h = x.to_owned();
        for l in &self.layers {
            h = h.dot(&l.weight) + &l.bias;
            let act = l.activation;
            h.mapv_inplace(|v| act.apply(v));
        }
        Ok(h)
    }

    /// Forward pass returning the output and a tape for [`Mlp::backward`].
    pub fn forward(&self, x: ArrayView2<f64>) -> Result<(Array2<f64>, Tape)> {
        self.check_input(&x)?;
        let mut tape = Tape {
            inputs: Vec::with_capacity(self.layers.len()),
            pre: Vec::with_capacity(self.layers.len()),
            post: Vec::with_capacity(self.layers.len()),
        };
        let mut h = x.to_owned();
        for l in &self.layers {
            let z = h.dot(&l.weight) + &l.bias;
            let act = l.activation;
            let a = if act == Activation::Linear {
                z.clone()
            } else {
                z.mapv(|v| act.apply(v))
            };
            tape.inputs.push(h);
            tape.pre.push(z);
            tape.post.push(a.clone());
            h = a;
        }
        Ok((h, tape))
    }

    /// Reverse pass. Returns parameter gradients and the gradient with
    /// respect to the network input.
    pub fn backward(&self, tape: Tape, grad_output: ArrayView2<f64>) -> (MlpGrads, Array2<f64>) {
        let (g, input) = self.reverse(tape, grad_output, true);
        (g, input.expect("requested"))
    }

    /// Reverse pass that skips the input gradient.
    pub fn backward_params(&self, tape: Tape, grad_output: ArrayView2<f64>) -> MlpGrads {
        self.reverse(tape, grad_output, false).0
    }

    fn reverse(&self, tape: Tape, grad_output: ArrayView2<f64>, want_input: bool) -> (MlpGrads, Option<Array2<f64>>) {
        let Tape { inputs, pre, post } = tape;
        let n = self.layers.len();
        let mut gw = Vec::with_capacity(n);
        let mut gb = Vec::with_capacity(n);
        let mut g = grad_output.to_owned();
        let records: Vec<_> = inputs.into_iter().zip(pre).zip(post).collect();
        for (i, (l, ((input, z), a))) in self.layers.iter().zip(records).enumerate().rev() {
            let act = l.activation;
            if act != Activation::Linear {
                ndarray::Zip::from(&mut g)
                    .and(&z)
                    .and(&a)
                    .for_each(|g, &z, &a| *g *= act.derivative(z, a));
            }
            gw.push(input.t().dot(&g).as_standard_layout().into_owned());
            gb.push(g.sum_axis(Axis(0)));
            if i > 0 || want_input {
                g = g.dot(&l.weight.t());
            }
        }
        gw.reverse();
        gb.reverse();
        let input = want_input.then_some(g);
        (MlpGrads { weight: gw, bias: gb }, input)
    }

    /// Writes a JSON topology header and a little-endian f64 parameter blob.
    pub fn save(&self, dir: &Path, name: &str) -> Result<()> {
        fs::create_dir_all(dir)?;
        let header = CheckpointHeader {
            format: CHECKPOINT_FORMAT.to_string(),
            widths: self.widths(),
            activations: self.layers.iter().map(|l| l.activation).collect(),
        };
        fs::write(dir.join(format!("{name}.json")), serde_json::to_vec_pretty(&header)?)?;
        let mut bytes = Vec::with_capacity(8 * self.num_params());
        for l in &self.layers {
            for v in l.weight.iter().chain(l.bias.iter()) {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        fs::write(dir.join(format!("{name}.bin")), bytes)?;
        Ok(())
    }

    pub fn load(dir: &Path, name: &str) -> Result<Self> {
        let header: CheckpointHeader = serde_json::from_slice(&fs::read(dir.join(format!("{name}.json")))?)?;
        if header.format != CHECKPOINT_FORMAT {
            return Err(Error::Config(format!("unsupported checkpoint format {}", header.format)));
        }
        if header.widths.len() != header.activations.len() + 1 {
            return Err(Error::Config("checkpoint widths and activations disagree".into()));
        }
        let bytes = fs::read(dir.join(format!("{name}.bin")))?;
        let mut values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
        let mut layers = Vec::new();
        for (i, &act) in header.activations.iter().enumerate() {
            let (a, b) = (header.widths[i], header.widths[i + 1]);
            let w: Vec<f64> = values.by_ref().take(a * b).collect();
            let bias: Vec<f64> = values.by_ref().take(b).collect();
            if w.len() != a * b || bias.len() != b {
                return Err(Error::Config("checkpoint blob is truncated".into()));
            }
            layers.push(Dense {
                weight: Array2::from_shape_vec((a, b), w).expect("sized"),
                bias: Array1::from(bias),
                activation: act,
            });
        }
        Ok(Mlp { layers })
    }
}
