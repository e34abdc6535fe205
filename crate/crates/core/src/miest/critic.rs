use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nncore::{Activation, Dense, Mlp, Tape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticKind {
    /// T(x, y) = g(x)·h(y).
    Separable,
    /// T(x, y) = f([x, y]).
    Concatenated,
    /// Embeddings g(x), h(y) fed to a concatenated scalar combiner.
    Bilinear,
}

impl std::str::FromStr for CriticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "separable" => Ok(CriticKind::Separable),
            "concatenated" | "concat" => Ok(CriticKind::Concatenated),
            "bilinear" => Ok(CriticKind::Bilinear),
            other => Err(Error::Config(format!("unknown critic {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CriticSpec {
    pub kind: CriticKind,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    /// Embedding dimension k_Z for separable and bilinear critics.
    pub embed_dim: usize,
}

impl Default for CriticSpec {
    fn default() -> Self {
        CriticSpec {
            kind: CriticKind::Concatenated,
            hidden_layers: 2,
            hidden_width: 256,
            embed_dim: 16,
        }
    }
}

impl CriticSpec {
    pub fn separable(hidden_layers: usize, hidden_width: usize, embed_dim: usize) -> Self {
        CriticSpec {
            kind: CriticKind::Separable,
            hidden_layers,
            hidden_width,
            embed_dim,
        }
    }

    pub fn concatenated(hidden_layers: usize, hidden_width: usize) -> Self {
        CriticSpec {
            kind: CriticKind::Concatenated,
            hidden_layers,
            hidden_width,
            embed_dim: 0,
        }
    }
}

/// Concatenated critic over all n×n pairs.
///
/// The first layer on `[x_i, y_j]` splits into `x_i W_x + y_j W_y + b`, so it
/// is computed once per row and broadcast over pairs; the remaining layers
/// run on the n² hidden rows.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCritic {
    pub w_x: Array2<f64>,
    pub w_y: Array2<f64>,
    pub b: Array1<f64>,
    /// Layers after the first; its output width is 1.
    pub tail: Mlp,
}

#[derive(Debug)]
pub struct PairTape {
    x: Array2<f64>,
    y: Array2<f64>,
    pre: Array2<f64>,
    tail: Tape,
}

impl PairCritic {
    pub fn new<R: Rng + ?Sized>(dx: usize, dy: usize, hidden_layers: usize, width: usize, rng: &mut R) -> Self {
        assert!(hidden_layers >= 1, "a concatenated critic needs a hidden layer");
        let first = Dense::xavier(dx + dy, width, Activation::Relu, rng);
        let w_x = first.weight.slice(ndarray::s![..dx, ..]).to_owned();
        let w_y = first.weight.slice(ndarray::s![dx.., ..]).to_owned();
        let mut widths = vec![width; hidden_layers];
        widths.push(1);
        let tail = Mlp::new(&widths, Activation::Relu, Activation::Linear, rng);
        PairCritic {
            w_x,
            w_y,
            b: first.bias,
            tail,
        }
    }

    pub fn num_params(&self) -> usize {
        self.w_x.len() + self.w_y.len() + self.b.len() + self.tail.num_params()
    }

    fn pre_activation(&self, x: ArrayView2<f64>, y: ArrayView2<f64>) -> Array2<f64> {
        let n = x.nrows();
        let h = self.b.len();
        let a = x.dot(&self.w_x);
        let bb = y.dot(&self.w_y) + &self.b;
        let mut pre = Array2::zeros((n * n, h));
        for i in 0..n {
            let ai = a.row(i);
            for j in 0..n {
                let mut row = pre.row_mut(i * n + j);
                Zip::from(&mut row).and(&ai).and(&bb.row(j)).for_each(|p, &u, &v| *p = u + v);
            }
        }
        pre
    }

    pub fn scores(&self, x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<Array2<f64>> {
        let n = x.nrows();
        let hidden = self.pre_activation(x, y).mapv(|v| v.max(0.0));
        let out = self.tail.predict(hidden.view())?;
        Ok(out.into_shape_with_order((n, n)).expect("n² scores"))
    }

    pub fn forward(&self, x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<(Array2<f64>, PairTape)> {
        let n = x.nrows();
        let pre = self.pre_activation(x, y);
        let hidden = pre.mapv(|v| v.max(0.0));
        let (out, tail) = self.tail.forward(hidden.view())?;
        let tape = PairTape {
            x: x.to_owned(),
            y: y.to_owned(),
            pre,
            tail,
        };
        Ok((out.into_shape_with_order((n, n)).expect("n² scores"), tape))
    }

    /// Returns parameter gradients in [`PairCritic::params_mut`] order and the
    /// gradients with respect to x and y.
    pub fn backward(&self, tape: PairTape, d_scores: ArrayView2<f64>) -> (Vec<Vec<f64>>, Array2<f64>, Array2<f64>) {
        let n = tape.x.nrows();
        let d_out = d_scores.to_owned().into_shape_with_order((n * n, 1)).expect("n² scores");
        let (tail_grads, mut d_hidden) = self.tail.backward(tape.tail, d_out.view());
        Zip::from(&mut d_hidden).and(&tape.pre).for_each(|g, &p| {
            if p <= 0.0 {
                *g = 0.0
            }
        });
        let h = self.b.len();
        let mut d_a = Array2::<f64>::zeros((n, h));
        let mut d_b = Array2::<f64>::zeros((n, h));
        for i in 0..n {
            for j in 0..n {
                let g = d_hidden.row(i * n + j);
                let mut ra = d_a.row_mut(i);
                ra += &g;
                let mut rb = d_b.row_mut(j);
                rb += &g;
            }
        }
        let g_wx = tape.x.t().dot(&d_a);
        let g_wy = tape.y.t().dot(&d_b);
        let g_b = d_b.sum_axis(Axis(0));
        let dx = d_a.dot(&self.w_x.t());
        let dy = d_b.dot(&self.w_y.t());
        let mut grads = vec![g_wx.iter().copied().collect(), g_wy.iter().copied().collect(), g_b.to_vec()];
        grads.extend(tail_grads.slices().into_iter().map(|s| s.to_vec()));
        (grads, dx, dy)
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = vec![
            self.w_x.as_slice_mut().expect("standard layout"),
            self.w_y.as_slice_mut().expect("standard layout"),
            self.b.as_slice_mut().expect("standard layout"),
        ];
        out.extend(self.tail.params_mut());
        out
    }
}

/// Trainable critic producing the n×n score matrix of a batch; the diagonal
/// holds joint pairs, off-diagonal entries pair x_i with y_j (j ≠ i).
#[derive(Debug, Clone, PartialEq)]
pub enum Critic {
    Separable { g: Mlp, h: Mlp },
    Concatenated(PairCritic),
    Bilinear { g: Mlp, h: Mlp, combiner: PairCritic },
}

#[derive(Debug)]
pub enum CriticTape {
    Separable { g: Tape, h: Tape, gx: Array2<f64>, hy: Array2<f64> },
    Concatenated(PairTape),
    Bilinear { g: Tape, h: Tape, pair: PairTape },
}

fn embedding_net<R: Rng + ?Sized>(input: usize, spec: &CriticSpec, rng: &mut R) -> Mlp {
    let mut widths = vec![input];
    widths.extend(std::iter::repeat_n(spec.hidden_width, spec.hidden_layers));
    widths.push(spec.embed_dim);
    Mlp::new(&widths, Activation::Relu, Activation::Linear, rng)
}

impl Critic {
    pub fn new<R: Rng + ?Sized>(spec: &CriticSpec, dx: usize, dy: usize, rng: &mut R) -> Result<Self> {
        if spec.hidden_width == 0 {
            return Err(Error::Config("critic hidden width must be positive".into()));
        }
        match spec.kind {
            CriticKind::Separable | CriticKind::Bilinear if spec.embed_dim == 0 => {
                Err(Error::Config("embedding critics need embed_dim ≥ 1".into()))
            }
            CriticKind::Concatenated if spec.hidden_layers == 0 => {
                Err(Error::Config("a concatenated critic needs at least one hidden layer".into()))
            }
            CriticKind::Separable => Ok(Critic::Separable {
                g: embedding_net(dx, spec, rng),
                h: embedding_net(dy, spec, rng),
            }),
            CriticKind::Concatenated => Ok(Critic::Concatenated(PairCritic::new(
                dx,
                dy,
                spec.hidden_layers,
                spec.hidden_width,
                rng,
            ))),
            CriticKind::Bilinear => {
                let g = embedding_net(dx, spec, rng);
                let h = embedding_net(dy, spec, rng);
                let combiner = PairCritic::new(spec.embed_dim, spec.embed_dim, 1, spec.hidden_width, rng);
                Ok(Critic::Bilinear { g, h, combiner })
            }
        }
    }

    pub fn num_params(&self) -> usize {
        match self {
            Critic::Separable { g, h } => g.num_params() + h.num_params(),
            Critic::Concatenated(c) => c.num_params(),
            Critic::Bilinear { g, h, combiner } => g.num_params() + h.num_params() + combiner.num_params(),
        }
    }

    fn check(x: &ArrayView2<f64>, y: &ArrayView2<f64>) -> Result<()> {
        if x.nrows() != y.nrows() {
            return Err(Error::shape(format!("batch sizes differ: {} vs {}", x.nrows(), y.nrows())));
        }
        if x.nrows() < 2 {
            return Err(Error::domain("score matrices need a batch of at least 2"));
        }
        Ok(())
    }

    /// Score matrix without recording a tape.
    pub fn scores(&self, x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<Array2<f64>> {
        Critic::check(&x, &y)?;
        match self {
            Critic::Separable { g, h } => Ok(g.predict(x)?.dot(&h.predict(y)?.t())),
            Critic::Concatenated(c) => c.scores(x, y),
            Critic::Bilinear { g, h, combiner } => combiner.scores(g.predict(x)?.view(), h.predict(y)?.view()),
        }
    }

    pub fn forward(&self, x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<(Array2<f64>, CriticTape)> {
        Critic::check(&x, &y)?;
        match self {
            Critic::Separable { g, h } => {
                let (gx, tg) = g.forward(x)?;
                let (hy, th) = h.forward(y)?;
                let s = gx.dot(&hy.t());
                Ok((s, CriticTape::Separable { g: tg, h: th, gx, hy }))
            }
            Critic::Concatenated(c) => {
                let (s, t) = c.forward(x, y)?;
                Ok((s, CriticTape::Concatenated(t)))
            }
            Critic::Bilinear { g, h, combiner } => {
                let (gx, tg) = g.forward(x)?;
                let (hy, th) = h.forward(y)?;
                let (s, tp) = combiner.forward(gx.view(), hy.view())?;
                Ok((s, CriticTape::Bilinear { g: tg, h: th, pair: tp }))
            }
        }
    }

    /// Parameter gradients in [`Critic::params_mut`] order, plus input
    /// gradients for x and y.
    pub fn backward(&self, tape: CriticTape, d_scores: ArrayView2<f64>) -> (Vec<Vec<f64>>, Array2<f64>, Array2<f64>) {
        match (self, tape) {
            (Critic::Separable { g, h }, CriticTape::Separable { g: tg, h: th, gx, hy }) => {
                let d_gx = d_scores.dot(&hy);
                let d_hy = d_scores.t().dot(&gx);
                let (gg, dx) = g.backward(tg, d_gx.view());
                let (gh, dy) = h.backward(th, d_hy.view());
                let mut grads: Vec<Vec<f64>> = gg.slices().into_iter().map(|s| s.to_vec()).collect();
                grads.extend(gh.slices().into_iter().map(|s| s.to_vec()));
                (grads, dx, dy)
            }
            (Critic::Concatenated(c), CriticTape::Concatenated(t)) => c.backward(t, d_scores),
            (Critic::Bilinear { g, h, combiner }, CriticTape::Bilinear { g: tg, h: th, pair }) => {
                let (gc, d_gx, d_hy) = combiner.backward(pair, d_scores);
                let (gg, dx) = g.backward(tg, d_gx.view());
                let (gh, dy) = h.backward(th, d_hy.view());
                let mut grads: Vec<Vec<f64>> = gg.slices().into_iter().map(|s| s.to_vec()).collect();
                grads.extend(gh.slices().into_iter().map(|s| s.to_vec()));
                grads.extend(gc);
                (grads, dx, dy)
            }
            _ => panic!("tape does not belong to this critic"),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            Critic::Separable { g, h } => {
                let mut p = g.params_mut();
                p.extend(h.params_mut());
                p
            }
            Critic::Concatenated(c) => c.params_mut(),
            Critic::Bilinear { g, h, combiner } => {
                let mut p = g.params_mut();
                p.extend(h.params_mut());
                p.extend(combiner.params_mut());
                p
            }
        }
    }
}
