use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::compile::{compile_loss, ArchConfig, CompiledLoss, NodeData};
use super::parse::parse_graph;
use super::train::{evaluate_split, train_composite, CompositeConfig, CompositeRecord};
use crate::datagen::{simulate_pendulum, PendulumSpec, PendulumWindows};
use crate::error::{Error, Result};
use crate::metrics::LinearReadout;

/// Past and future windows share one encoder; only the information between
/// their embeddings is rewarded.
pub const DYNAMICS_GRAPH: &str = "observed X, Y\nlatent Zx, Zy\nencode X -> Zx\nencode Y -> Zy\ntie Zx Zy\ndecode Zx -> Zy\n";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DynamicsConfig {
    /// Simulation parameters; `n_experiments` is replaced by the split sizes.
    pub pendulum: PendulumSpec,
    pub train_experiments: usize,
    pub test_experiments: usize,
    /// Training experiments used for the train side of the MI trace.
    pub train_eval_experiments: usize,
    pub k_z: usize,
    pub beta: f64,
    pub encoder_hidden: Vec<usize>,
    pub critic_hidden_layers: usize,
    pub critic_width: usize,
    pub training: CompositeConfig,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig {
            pendulum: PendulumSpec::default(),
            train_experiments: 1000,
            test_experiments: 100,
            train_eval_experiments: 100,
            k_z: 2,
            beta: 256.0,
            encoder_hidden: vec![1024, 1024],
            critic_hidden_layers: 1,
            critic_width: 32,
            training: CompositeConfig {
                epochs: 200,
                lr: 5e-5,
                ..Default::default()
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DynamicsReport {
    pub record: CompositeRecord,
    pub final_train_mi: f64,
    pub final_test_mi: f64,
    /// Held-out R² of (sin θ, cos θ) read out linearly from the embedding.
    pub r2_angle_from_embedding: f64,
    /// Held-out R² of the embedding predicted linearly from (sin θ, cos θ, ω).
    pub r2_embedding_from_state: f64,
    pub max_energy_drift: f64,
    /// Posterior means of the held-out past windows.
    pub test_embedding: Array2<f64>,
    pub test_theta: Array1<f64>,
    pub test_omega: Array1<f64>,
}

fn node_data(w: &PendulumWindows) -> NodeData {
    let mut d = NodeData::new();
    d.insert("X".into(), w.x.clone());
    d.insert("Y".into(), w.y.clone());
    d
}

fn angle_targets(w: &PendulumWindows) -> Array2<f64> {
    let mut t = Array2::zeros((w.theta.len(), 2));
    for (i, th) in w.theta.iter().enumerate() {
        t[[i, 0]] = th.sin();
        t[[i, 1]] = th.cos();
    }
    t
}

fn state_features(w: &PendulumWindows) -> Array2<f64> {
    let a = angle_targets(w);
    ndarray::concatenate(Axis(1), &[a.view(), w.omega.view().insert_axis(Axis(1))]).expect("equal rows")
}

/// Simulates the pendulum, trains the tied-encoder dynamics model on past
/// and future windows, and scores the learned coordinates.
pub fn run_dynamics(cfg: &DynamicsConfig) -> Result<(DynamicsReport, CompiledLoss)> {
    if cfg.train_experiments == 0 || cfg.test_experiments == 0 {
        return Err(Error::Config("need training and test experiments".into()));
    }
    let spec = PendulumSpec {
        n_experiments: cfg.train_experiments + cfg.test_experiments,
        ..cfg.pendulum.clone()
    };
    let sim = simulate_pendulum(&spec)?;
    let train_w = sim.windows(0..cfg.train_experiments);
    let test_w = sim.windows(cfg.train_experiments..spec.n_experiments);
    let eval_w = sim.windows(0..cfg.train_eval_experiments.clamp(1, cfg.train_experiments));
    let (train, test, train_eval) = (node_data(&train_w), node_data(&test_w), node_data(&eval_w));

    let mut graph = parse_graph(DYNAMICS_GRAPH)?;
    graph.beta = cfg.beta;
    let arch = ArchConfig {
        k_z: cfg.k_z,
        encoder_hidden: cfg.encoder_hidden.clone(),
        decoder_hidden: vec![],
        critic_hidden_layers: cfg.critic_hidden_layers,
        critic_width: cfg.critic_width,
        seed: cfg.training.seed,
        ..Default::default()
    }
    .with_data_widths(&train);
    let mut loss = compile_loss(&graph, &arch)?;
    let mut record = train_composite(&mut loss, &train, &test, &cfg.training)?;

    // Replace the train side of the trace by a test-sized training subset
    // only at the final epoch; earlier epochs keep the full-train value.
    let seed = crate::rng::derive_seed(cfg.training.seed, &[2]);
    let (_, train_mi, _) = evaluate_split(&loss, &train_eval, cfg.training.batch_size, seed)?;
    let (_, test_mi, _) = evaluate_split(&loss, &test, cfg.training.batch_size, seed)?;
    if let Some(last) = record.epochs.last_mut() {
        last.train_mi = train_mi;
    }

    let emb_train = loss.embed("Zx", &train)?;
    let emb_test = loss.embed("Zx", &test)?;
    let r2_angle = LinearReadout::fit(emb_train.view(), angle_targets(&train_w).view())?
        .r2(emb_test.view(), angle_targets(&test_w).view());
    let r2_state = LinearReadout::fit(state_features(&train_w).view(), emb_train.view())?
        .r2(state_features(&test_w).view(), emb_test.view());

    let report = DynamicsReport {
        record,
        final_train_mi: train_mi.unwrap_or(f64::NAN),
        final_test_mi: test_mi.unwrap_or(f64::NAN),
        r2_angle_from_embedding: r2_angle,
        r2_embedding_from_state: r2_state,
        max_energy_drift: sim.max_energy_drift,
        test_embedding: emb_test,
        test_theta: test_w.theta,
        test_omega: test_w.omega,
    };
    Ok((report, loss))
}
