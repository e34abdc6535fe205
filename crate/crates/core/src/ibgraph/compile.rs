use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::parse::{LossGraphSpec, NodeKind};
use super::terms::{classify_terms, LossTerm, TermKind};
use crate::error::{Error, Result};
use crate::miest::{mine_objective, PairCritic};
use crate::nncore::{kl_standard_normal, reparameterize, Activation, GaussianPosterior, Mlp};
use crate::rng::{derive_seed, rng_from_seed, standard_normal_matrix};

/// Data for each observed node, one row per datum.
pub type NodeData = BTreeMap<String, Array2<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArchConfig {
    /// Width of each observed node.
    pub widths: BTreeMap<String, usize>,
    /// Latent dimension unless overridden in `latent_dims`.
    pub k_z: usize,
    pub latent_dims: BTreeMap<String, usize>,
    pub encoder_hidden: Vec<usize>,
    pub decoder_hidden: Vec<usize>,
    pub critic_hidden_layers: usize,
    pub critic_width: usize,
    pub activation: Activation,
    pub seed: u64,
}

impl Default for ArchConfig {
    fn default() -> Self {
        ArchConfig {
            widths: BTreeMap::new(),
            k_z: 2,
            latent_dims: BTreeMap::new(),
            encoder_hidden: vec![1024, 1024],
            decoder_hidden: vec![1024, 1024],
            critic_hidden_layers: 2,
            critic_width: 256,
            activation: Activation::Relu,
            seed: 0,
        }
    }
}

impl ArchConfig {
    /// Observed widths taken from the columns of `data`.
    pub fn with_data_widths(mut self, data: &NodeData) -> Self {
        for (k, v) in data {
            self.widths.insert(k.clone(), v.ncols());
        }
        self
    }
}

#[derive(Debug, Clone)]
struct LatentSlot {
    name: String,
    inputs: Vec<String>,
    net: usize,
    k: usize,
}

#[derive(Debug, Clone)]
struct DecoderSlot {
    term: usize,
    inputs: Vec<String>,
    target: String,
    net: Mlp,
}

#[derive(Debug, Clone)]
struct MineSlot {
    term: usize,
    a: String,
    b: String,
    critic: PairCritic,
}

/// Per-term values and diagnostics of one loss evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossValues {
    pub total: f64,
    /// Value of each term before its coefficient: mean KL, mean
    /// −½‖x − μ‖², or the MINE estimate.
    pub terms: Vec<f64>,
    /// Σ over latent dimensions of the batch variance of μ, per latent.
    pub mu_variance: BTreeMap<String, f64>,
}

/// A graph bound to networks: Σ KL − β(Σ recon + Σ MINE) on a batch.
#[derive(Debug, Clone)]
pub struct CompiledLoss {
    pub terms: Vec<LossTerm>,
    pub beta: f64,
    latents: Vec<LatentSlot>,
    encoders: Vec<Mlp>,
    decoders: Vec<DecoderSlot>,
    mines: Vec<MineSlot>,
    ema: Vec<Option<f64>>,
}

fn graph_err(msg: impl Into<String>) -> Error {
    Error::Graph(msg.into())
}

fn concat_cols(parts: &[ArrayView2<f64>]) -> Result<Array2<f64>> {
    concatenate(Axis(1), parts).map_err(|_| Error::shape("inputs have different sample counts"))
}

/// Compiles classified terms of `spec` into networks initialized from `arch.seed`.
pub fn compile_loss(spec: &LossGraphSpec, arch: &ArchConfig) -> Result<CompiledLoss> {
    let terms = classify_terms(spec);
    let mut rng = rng_from_seed(derive_seed(arch.seed, &[0]));
    let width = |n: &str| -> Result<usize> {
        arch.widths.get(n).copied().ok_or_else(|| graph_err(format!("no width bound for observed node `{n}`")))
    };
    let k_of = |n: &str| arch.latent_dims.get(n).copied().unwrap_or(arch.k_z);

    // Latents in encoder-edge order, with tie groups sharing one network.
    let mut latents: Vec<LatentSlot> = Vec::new();
    let mut encoders: Vec<Mlp> = Vec::new();
    for e in &spec.encoder {
        if spec.kind(&e.target) != Some(NodeKind::Latent) {
            continue;
        }
        if latents.iter().any(|l| l.name == e.target) {
            return Err(graph_err(format!(
                "latent `{}` has several encoder edges; use one joint `encode (..) -> {}`",
                e.target, e.target
            )));
        }
        if let Some(s) = e.sources.iter().find(|s| spec.kind(s) != Some(NodeKind::Observed)) {
            return Err(graph_err(format!("encoder input `{s}` is latent; only observed inputs are supported")));
        }
        let in_dim = e.sources.iter().map(|s| width(s)).sum::<Result<usize>>()?;
        let k = k_of(&e.target);
        if k == 0 {
            return Err(graph_err(format!("latent `{}` has zero width", e.target)));
        }
        let partner = spec.ties.iter().find_map(|(a, b)| {
            let other = if *a == e.target { b } else if *b == e.target { a } else { return None };
            latents.iter().find(|l| &l.name == other)
        });
        let net = match partner {
            Some(p) => {
                let enc = &encoders[p.net];
                if enc.input_dim() != in_dim || p.k != k {
                    return Err(graph_err(format!(
                        "tied latents `{}` and `{}` differ in input width ({} vs {in_dim}) or dimension ({} vs {k})",
                        p.name,
                        e.target,
                        enc.input_dim(),
                        p.k
                    )));
                }
                p.net
            }
            None => {
                let mut widths = vec![in_dim];
                widths.extend(&arch.encoder_hidden);
                widths.push(2 * k);
                encoders.push(Mlp::new(&widths, arch.activation, Activation::Linear, &mut rng));
                encoders.len() - 1
            }
        };
        latents.push(LatentSlot { name: e.target.clone(), inputs: e.sources.clone(), net, k });
    }

    let latent_k = |n: &str| latents.iter().find(|l| l.name == n).map(|l| l.k);
    let mut decoders = Vec::new();
    let mut mines = Vec::new();
    for (i, t) in terms.iter().enumerate() {
        match t.kind {
            TermKind::EncoderKl => {}
            TermKind::DecoderGaussianRecon => {
                let mut in_dim = 0;
                for s in &t.sources {
                    in_dim += latent_k(s).ok_or_else(|| graph_err(format!("decoder input `{s}` is not an encoded latent")))?;
                }
                let mut widths = vec![in_dim];
                widths.extend(&arch.decoder_hidden);
                widths.push(width(&t.target)?);
                let net = Mlp::new(&widths, arch.activation, Activation::Linear, &mut rng);
                decoders.push(DecoderSlot { term: i, inputs: t.sources.clone(), target: t.target.clone(), net });
            }
            TermKind::DecoderLatentMine => {
                if t.sources.len() != 1 {
                    return Err(graph_err(format!("MINE term `{t}` needs exactly one source latent")));
                }
                let a = &t.sources[0];
                let (ka, kb) = match (latent_k(a), latent_k(&t.target)) {
                    (Some(ka), Some(kb)) => (ka, kb),
                    _ => return Err(graph_err(format!("MINE term `{t}` refers to an unencoded latent"))),
                };
                let critic = PairCritic::new(ka, kb, arch.critic_hidden_layers, arch.critic_width, &mut rng);
                mines.push(MineSlot { term: i, a: a.clone(), b: t.target.clone(), critic });
            }
        }
    }
    let n_mine = mines.len();
    Ok(CompiledLoss { terms, beta: spec.beta, latents, encoders, decoders, mines, ema: vec![None; n_mine] })
}

struct LatentState {
    post: GaussianPosterior,
    z: Array2<f64>,
    std: Array2<f64>,
    tape: crate::nncore::Tape,
}

impl CompiledLoss {
    pub fn latent_names(&self) -> Vec<&str> {
        self.latents.iter().map(|l| l.name.as_str()).collect()
    }

    pub fn latent_dim(&self, name: &str) -> Option<usize> {
        self.latents.iter().find(|l| l.name == name).map(|l| l.k)
    }

    pub fn num_encoder_nets(&self) -> usize {
        self.encoders.len()
    }

    pub fn num_params(&self) -> usize {
        self.encoders.iter().map(Mlp::num_params).sum::<usize>()
            + self.decoders.iter().map(|d| d.net.num_params()).sum::<usize>()
            + self.mines.iter().map(|m| m.critic.num_params()).sum::<usize>()
    }

    /// All parameter buffers: encoders, then decoders, then critics.
    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for e in &mut self.encoders {
            out.extend(e.params_mut());
        }
        for d in &mut self.decoders {
            out.extend(d.net.params_mut());
        }
        for m in &mut self.mines {
            out.extend(m.critic.params_mut());
        }
        out
    }

    /// Index of the first MINE term, if the graph has one.
    pub fn mine_term(&self) -> Option<usize> {
        self.mines.first().map(|m| m.term)
    }

    /// Standard-normal reparameterization noise for a batch of `n`.
    pub fn draw_noise<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> BTreeMap<String, Array2<f64>> {
        self.latents
            .iter()
            .map(|l| (l.name.clone(), standard_normal_matrix(rng, n, l.k)))
            .collect()
    }

    fn batch_rows(&self, data: &NodeData) -> Result<usize> {
        let mut n = None;
        for l in &self.latents {
            for s in &l.inputs {
                let m = data.get(s).ok_or_else(|| graph_err(format!("no data for observed node `{s}`")))?;
                match n {
                    None => n = Some(m.nrows()),
                    Some(r) if r != m.nrows() => return Err(Error::shape("observed nodes have different sample counts")),
                    _ => {}
                }
            }
        }
        n.ok_or_else(|| graph_err("graph has no encoded latents"))
    }

    fn encoder_input(&self, slot: &LatentSlot, data: &NodeData) -> Result<Array2<f64>> {
        let parts: Vec<ArrayView2<f64>> = slot.inputs.iter().map(|s| data[s].view()).collect();
        concat_cols(&parts)
    }

    /// Posterior means of latent `name` for every row of `data`.
    pub fn embed(&self, name: &str, data: &NodeData) -> Result<Array2<f64>> {
        let slot = self
            .latents
            .iter()
            .find(|l| l.name == name)
            .ok_or_else(|| graph_err(format!("unknown latent `{name}`")))?;
        self.batch_rows(data)?;
        let head = self.encoders[slot.net].predict(self.encoder_input(slot, data)?.view())?;
        Ok(head.slice(s![.., ..slot.k]).to_owned())
    }

    /// Loss on a batch without gradients.
    pub fn evaluate(&self, data: &NodeData, noise: &BTreeMap<String, Array2<f64>>) -> Result<LossValues> {
        let (values, _) = self.run(data, noise, None)?;
        Ok(values)
    }

    /// Loss and its exact gradient in [`CompiledLoss::params_mut`] order.
    pub fn loss_and_grad(&self, data: &NodeData, noise: &BTreeMap<String, Array2<f64>>) -> Result<(LossValues, Vec<Vec<f64>>)> {
        let (values, grads) = self.run(data, noise, Some(None))?;
        Ok((values, grads.expect("gradients requested")))
    }

    /// Training variant: MINE denominators use a running average with
    /// `ema_rate`, which biases the gradient less on small batches.
    pub fn training_grad(
        &mut self,
        data: &NodeData,
        noise: &BTreeMap<String, Array2<f64>>,
        ema_rate: f64,
    ) -> Result<(LossValues, Vec<Vec<f64>>)> {
        let mut ema = std::mem::take(&mut self.ema);
        let out = self.run(data, noise, Some(Some((&mut ema, ema_rate))));
        self.ema = ema;
        let (values, grads) = out?;
        Ok((values, grads.expect("gradients requested")))
    }

    #[allow(clippy::type_complexity)]
    fn run(
        &self,
        data: &NodeData,
        noise: &BTreeMap<String, Array2<f64>>,
        grad: Option<Option<(&mut Vec<Option<f64>>, f64)>>,
    ) -> Result<(LossValues, Option<Vec<Vec<f64>>>)> {
        let n = self.batch_rows(data)?;
        if n < 2 {
            return Err(Error::domain("a batch needs at least two rows"));
        }
        let want_grad = grad.is_some();
        let mut ema = grad.flatten();

        let mut states: BTreeMap<&str, LatentState> = BTreeMap::new();
        let mut mu_variance = BTreeMap::new();
        for slot in &self.latents {
            let eta = noise
                .get(&slot.name)
                .ok_or_else(|| graph_err(format!("no noise for latent `{}`", slot.name)))?;
            if eta.dim() != (n, slot.k) {
                return Err(Error::shape(format!("noise for `{}` has shape {:?}", slot.name, eta.dim())));
            }
            let (head, tape) = self.encoders[slot.net].forward(self.encoder_input(slot, data)?.view())?;
            let post = GaussianPosterior::from_head(head.view())?;
            let (z, std) = reparameterize(&post, eta.view())?;
            let var = post.mu.var_axis(Axis(0), 0.0).sum();
            mu_variance.insert(slot.name.clone(), var);
            states.insert(slot.name.as_str(), LatentState { post, z, std, tape });
        }

        let mut values = vec![0.0; self.terms.len()];
        let mut d_mu: BTreeMap<&str, Array2<f64>> = BTreeMap::new();
        let mut d_lv: BTreeMap<&str, Array2<f64>> = BTreeMap::new();
        let mut d_z: BTreeMap<&str, Array2<f64>> = BTreeMap::new();
        for slot in &self.latents {
            d_mu.insert(slot.name.as_str(), Array2::zeros((n, slot.k)));
            d_lv.insert(slot.name.as_str(), Array2::zeros((n, slot.k)));
            d_z.insert(slot.name.as_str(), Array2::zeros((n, slot.k)));
        }
        let nf = n as f64;

        // Encoder KL terms.
        for (i, t) in self.terms.iter().enumerate() {
            if t.kind != TermKind::EncoderKl {
                continue;
            }
            let st = &states[t.target.as_str()];
            let kl = kl_standard_normal(&st.post)?;
            values[i] = kl.per_datum.mean().unwrap_or(0.0);
            if want_grad {
                let c = t.coefficient / nf;
                *d_mu.get_mut(t.target.as_str()).unwrap() += &(kl.d_mu * c);
                *d_lv.get_mut(t.target.as_str()).unwrap() += &(kl.d_log_var * c);
            }
        }

        let mut dec_grads = Vec::with_capacity(self.decoders.len());
        for d in &self.decoders {
            let t = &self.terms[d.term];
            let parts: Vec<ArrayView2<f64>> = d.inputs.iter().map(|s| states[s.as_str()].z.view()).collect();
            let input = concat_cols(&parts)?;
            let target = data.get(&d.target).ok_or_else(|| graph_err(format!("no data for observed node `{}`", d.target)))?;
            if target.nrows() != n {
                return Err(Error::shape("observed nodes have different sample counts"));
            }
            let (mu_x, tape) = d.net.forward(input.view())?;
            let diff = target - &mu_x;
            values[d.term] = -0.5 * diff.mapv(|v| v * v).sum() / nf;
            if want_grad {
                let g_out = diff * (t.coefficient / nf);
                let (g, g_in) = d.net.backward(tape, g_out.view());
                let mut col = 0;
                for s in &d.inputs {
                    let k = states[s.as_str()].z.ncols();
                    *d_z.get_mut(s.as_str()).unwrap() += &g_in.slice(s![.., col..col + k]);
                    col += k;
                }
                dec_grads.push(g.slices().into_iter().map(|s| s.to_vec()).collect::<Vec<_>>());
            }
        }

        let mut critic_grads = Vec::with_capacity(self.mines.len());
        for (mi, m) in self.mines.iter().enumerate() {
            let t = &self.terms[m.term];
            let (za, zb) = (&states[m.a.as_str()].z, &states[m.b.as_str()].z);
            let (scores, tape) = m.critic.forward(za.view(), zb.view())?;
            let out = match ema.as_mut() {
                Some((state, rate)) => mine_objective(scores.view(), Some(&mut state[mi]), *rate)?,
                None => mine_objective(scores.view(), None, 0.0)?,
            };
            values[m.term] = out.estimate;
            if want_grad {
                let d_s = out.grad * t.coefficient;
                let (g, ga, gb) = m.critic.backward(tape, d_s.view());
                *d_z.get_mut(m.a.as_str()).unwrap() += &ga;
                *d_z.get_mut(m.b.as_str()).unwrap() += &gb;
                critic_grads.push(g);
            }
        }

        let total = self.terms.iter().zip(&values).map(|(t, v)| t.coefficient * v).sum();
        let values = LossValues { total, terms: values, mu_variance };
        if !want_grad {
            return Ok((values, None));
        }

        let mut enc_grads: Vec<Option<Vec<Vec<f64>>>> = vec![None; self.encoders.len()];
        for slot in &self.latents {
            let st = states.remove(slot.name.as_str()).expect("latent state");
            let name = slot.name.as_str();
            let dz = &d_z[name];
            let dmu = &d_mu[name] + dz;
            let noise_l = &noise[&slot.name];
            let dlv = &d_lv[name] + &(dz * &st.std * noise_l * 0.5);
            let head_grad = GaussianPosterior::head_gradient(&dmu, &dlv);
            let g = self.encoders[slot.net].backward_params(st.tape, head_grad.view());
            let flat: Vec<Vec<f64>> = g.slices().into_iter().map(|s| s.to_vec()).collect();
            match &mut enc_grads[slot.net] {
                Some(acc) => {
                    for (a, b) in acc.iter_mut().zip(&flat) {
                        for (x, y) in a.iter_mut().zip(b) {
                            *x += y;
                        }
                    }
                }
                slot_acc @ None => *slot_acc = Some(flat),
            }
        }
        let mut grads = Vec::new();
        for g in enc_grads {
            grads.extend(g.expect("every encoder net feeds a latent"));
        }
        for g in dec_grads {
            grads.extend(g);
        }
        for g in critic_grads {
            grads.extend(g);
        }
        Ok((values, Some(grads)))
    }

    /// Writes encoder and decoder checkpoints plus a JSON manifest of terms.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (i, e) in self.encoders.iter().enumerate() {
            e.save(dir, &format!("encoder_{i}"))?;
        }
        for (i, d) in self.decoders.iter().enumerate() {
            d.net.save(dir, &format!("decoder_{i}"))?;
        }
        let manifest = serde_json::json!({
            "beta": self.beta,
            "terms": self.terms.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
            "latents": self.latents.iter().map(|l| serde_json::json!({
                "name": l.name, "inputs": l.inputs, "encoder": format!("encoder_{}", l.net), "k": l.k,
            })).collect::<Vec<_>>(),
            "decoders": self.decoders.iter().enumerate().map(|(i, d)| serde_json::json!({
                "name": format!("decoder_{i}"), "inputs": d.inputs, "target": d.target,
            })).collect::<Vec<_>>(),
        });
        std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ibgraph::parse::parse_graph;
    use crate::rng::standard_normal_matrix;

    fn tiny_arch(data: &NodeData, k: usize, seed: u64) -> ArchConfig {
        ArchConfig {
            k_z: k,
            encoder_hidden: vec![3],
            decoder_hidden: vec![3],
            critic_hidden_layers: 1,
            critic_width: 3,
            activation: Activation::Sigmoid,
            seed,
            ..Default::default()
        }
        .with_data_widths(data)
    }

    fn toy_data(n: usize, seed: u64) -> NodeData {
        let mut rng = rng_from_seed(seed);
        let mut d = NodeData::new();
        d.insert("X".into(), standard_normal_matrix(&mut rng, n, 2));
        d.insert("Y".into(), standard_normal_matrix(&mut rng, n, 2));
        d
    }

    fn fd_check(graph: &str, k: usize) {
        let data = toy_data(6, 1);
        let spec = parse_graph(graph).unwrap();
        let mut loss = compile_loss(&spec, &tiny_arch(&data, k, 2)).unwrap();
        assert!(loss.num_params() <= 200, "{}", loss.num_params());
        let noise = loss.draw_noise(6, &mut rng_from_seed(3));
        let (_, grads) = loss.loss_and_grad(&data, &noise).unwrap();
        let h = 1e-5;
        let n_buf = loss.params_mut().len();
        assert_eq!(n_buf, grads.len());
        for b in 0..n_buf {
            for i in 0..grads[b].len() {
                let orig = loss.params_mut()[b][i];
                loss.params_mut()[b][i] = orig + h;
                let up = loss.evaluate(&data, &noise).unwrap().total;
                loss.params_mut()[b][i] = orig - h;
                let down = loss.evaluate(&data, &noise).unwrap().total;
                loss.params_mut()[b][i] = orig;
                let fd = (up - down) / (2.0 * h);
                let an = grads[b][i];
                let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-6);
                assert!(rel < 1e-4, "{graph}: buffer {b} entry {i}: fd {fd} vs {an}");
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        fd_check("X->Zx; Zx->X; beta = 2", 1);
        fd_check("X->Zx; Zx->Y", 2);
        fd_check("X->Zx; Y->Zy; Zx->X; Zy->Y; Zx->Zy; beta = 3", 1);
        fd_check("encode (X,Y)->Z; Z->X; Z->Y", 1);
        fd_check("X->Zx; Y->Zy; tie Zx Zy; Zx->Zy", 2);
        fd_check("X->Zx; X->Wx; decode (Zx,Wx)->X", 1);
    }

    #[test]
    fn untrained_beta_vae_matches_hand_evaluation() {
        let data = toy_data(5, 4);
        let spec = parse_graph("X->Zx; Zx->X; beta = 1.5").unwrap();
        let loss = compile_loss(&spec, &tiny_arch(&data, 2, 5)).unwrap();
        let noise = loss.draw_noise(5, &mut rng_from_seed(6));
        let got = loss.evaluate(&data, &noise).unwrap();

        let x = &data["X"];
        let head = loss.encoders[0].predict(x.view()).unwrap();
        let dec = &loss.decoders[0].net;
        let eta = &noise["Zx"];
        let mut kl = 0.0;
        let mut recon = 0.0;
        for i in 0..5 {
            let mut z = vec![0.0; 2];
            for j in 0..2 {
                let (mu, lv) = (head[[i, j]], head[[i, j + 2]]);
                kl += 0.5 * (lv.exp() + mu * mu - 1.0 - lv);
                z[j] = mu + (0.5 * lv).exp() * eta[[i, j]];
            }
            let zrow = ndarray::Array2::from_shape_vec((1, 2), z).unwrap();
            let out = dec.predict(zrow.view()).unwrap();
            for j in 0..2 {
                recon += -0.5 * (x[[i, j]] - out[[0, j]]).powi(2);
            }
        }
        let expected = kl / 5.0 - 1.5 * recon / 5.0;
        assert!((got.total - expected).abs() < 1e-12, "{} vs {expected}", got.total);
    }

    #[test]
    fn tied_encoders_share_one_network() {
        let data = toy_data(4, 7);
        let spec = parse_graph("X->Zx; Y->Zy; tie Zx Zy; Zx->Zy").unwrap();
        let mut loss = compile_loss(&spec, &tiny_arch(&data, 2, 8)).unwrap();
        assert_eq!(loss.num_encoder_nets(), 1);
        let mut same = NodeData::new();
        same.insert("X".into(), data["X"].clone());
        same.insert("Y".into(), data["X"].clone());
        let before = loss.embed("Zy", &same).unwrap();
        loss.params_mut()[0][0] += 0.3;
        let zx = loss.embed("Zx", &same).unwrap();
        let zy = loss.embed("Zy", &same).unwrap();
        assert_eq!(zx, zy);
        assert_ne!(zy, before);
    }

    #[test]
    fn tie_with_mismatched_widths_is_rejected() {
        let mut data = toy_data(4, 7);
        data.insert("Y".into(), Array2::zeros((4, 3)));
        let spec = parse_graph("X->Zx; Y->Zy; tie Zx Zy; Zx->Zy").unwrap();
        assert!(matches!(compile_loss(&spec, &tiny_arch(&data, 2, 8)), Err(Error::Graph(_))));
    }

    #[test]
    fn missing_width_is_an_error() {
        let spec = parse_graph("X->Zx; Zx->X").unwrap();
        assert!(compile_loss(&spec, &ArchConfig::default()).is_err());
    }

    #[test]
    fn dynamics_term_set() {
        let data = toy_data(4, 1);
        let spec = parse_graph("X->Zx; Y->Zy; tie Zx Zy; Zx->Zy").unwrap();
        let loss = compile_loss(&spec, &tiny_arch(&data, 2, 8)).unwrap();
        let mut names: Vec<String> = loss.terms.iter().map(|t| t.to_string()).collect();
        names.sort();
        assert_eq!(names, vec!["KL(X;Zx)", "KL(Y;Zy)", "MINE(Zx;Zy)"]);
    }
}
