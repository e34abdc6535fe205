use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::datagen::LinearModelSpec;
use crate::error::{Error, Result};
use crate::lindr::{Method, RccaConfig};

/// Data source of every cell. Axis values overwrite fields of the template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    /// Linear self/shared model; seeds are replaced per trial.
    Linear { spec: LinearModelSpec },
    /// Correlated Gaussian pair with `mi` nats split evenly over `k` pairs.
    Gaussian { k: usize, mi: f64, n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    /// RC′ of held-out projections.
    RcPrime,
    /// Correlation-matrix Gaussian MI of held-out projections.
    LinearMi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub name: String,
    pub generator: Generator,
    pub methods: Vec<Method>,
    pub measure: Measure,
    /// Latent dimension |Z| unless an axis sets it.
    pub k: usize,
    /// Cartesian product of these axes forms the cells, last axis fastest.
    pub axes: Vec<SweepAxis>,
    pub trials: usize,
    /// Noise draws for the RC0 baseline.
    pub rc0_trials: usize,
    pub rcca: RccaConfig,
    /// Held-out sample size as a multiple of the training size.
    pub test_ratio: f64,
    pub output_dir: Option<PathBuf>,
    pub master_seed: u64,
    /// Worker threads; `None` uses every core.
    pub workers: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "sweep".into(),
            generator: Generator::Linear {
                spec: LinearModelSpec::from_snr(200, 300, 1, 1, 5.0, 5.0, 0, 0),
            },
            methods: vec![Method::Pca, Method::Rcca],
            measure: Measure::RcPrime,
            k: 1,
            axes: Vec::new(),
            trials: 10,
            rc0_trials: 10,
            rcca: RccaConfig::default(),
            test_ratio: 1.0,
            output_dir: None,
            master_seed: 0,
            workers: None,
        }
    }
}

/// Axis names understood by [`apply_axis`].
pub const AXIS_NAMES: &[&str] = &[
    "gamma_shared",
    "gamma_self",
    "gamma_tilde",
    "m_shared",
    "m_self",
    "m_tilde",
    "t",
    "q_tilde",
    "n",
    "k",
    "c",
    "mi",
];

fn count(name: &str, v: f64) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v.is_finite() {
        Ok(v as usize)
    } else {
        Err(Error::Config(format!("axis `{name}` needs whole non-negative values, got {v}")))
    }
}

/// Sets one axis value on the working config of a cell. Ratio axes are
/// resolved against the current values: `gamma_tilde` scales γ_shared from
/// γ_self, `m_tilde` sets m_shared = m̃·m_self, `q_tilde` sets T = q̃·k.
pub fn apply_axis(cfg: &mut ExperimentConfig, name: &str, v: f64) -> Result<()> {
    let k = cfg.k;
    match (&mut cfg.generator, name) {
        (_, "k") => cfg.k = count(name, v)?,
        (_, "c") => {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("c must lie in [0, 1], got {v}")));
            }
            cfg.rcca.c_x = v;
            cfg.rcca.c_y = v;
        }
        (Generator::Linear { spec }, "gamma_shared") => spec.sigma2_p = v * spec.sigma2_r_x / spec.sigma2_q_x,
        (Generator::Linear { spec }, "gamma_self") => {
            spec.sigma2_u_x = v * spec.sigma2_r_x / spec.sigma2_v_x;
            spec.sigma2_u_y = v * spec.sigma2_r_y / spec.sigma2_v_y;
        }
        (Generator::Linear { spec }, "gamma_tilde") => {
            let g_self = spec.gamma_self_x();
            spec.sigma2_p = v * g_self * spec.sigma2_r_x / spec.sigma2_q_x;
        }
        (Generator::Linear { spec }, "m_shared") => spec.m_shared = count(name, v)?,
        (Generator::Linear { spec }, "m_self") => {
            spec.m_self_x = count(name, v)?;
            spec.m_self_y = spec.m_self_x;
        }
        (Generator::Linear { spec }, "m_tilde") => spec.m_shared = count(name, (v * spec.m_self_x as f64).round())?,
        (Generator::Linear { spec }, "t") => spec.t = count(name, v)?,
        (Generator::Linear { spec }, "q_tilde") => spec.t = count(name, (v * k as f64).round())?,
        (Generator::Linear { spec }, "n") => {
            spec.n_x = count(name, v)?;
            spec.n_y = spec.n_x;
        }
        (Generator::Gaussian { mi, .. }, "mi") => *mi = v,
        (Generator::Gaussian { n, .. }, "t") => *n = count(name, v)?,
        (Generator::Gaussian { k: dims, .. }, "n") => *dims = count(name, v)?,
        (Generator::Gaussian { n, .. }, "q_tilde") => *n = count(name, (v * k as f64).round())?,
        _ => return Err(Error::Config(format!("axis `{name}` does not apply to this generator"))),
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("method list is empty".into()));
        }
        if !(self.test_ratio > 0.0) {
            return Err(Error::Config("test_ratio must be positive".into()));
        }
        if self.measure == Measure::RcPrime && self.rc0_trials == 0 {
            return Err(Error::Config("rc0_trials must be at least 1".into()));
        }
        for a in &self.axes {
            if a.values.is_empty() {
                return Err(Error::Config(format!("axis `{}` has an empty grid", a.name)));
            }
            if !AXIS_NAMES.contains(&a.name.as_str()) {
                return Err(Error::Config(format!("unknown axis `{}`", a.name)));
            }
        }
        // Every cell must resolve.
        for cell in self.cells() {
            self.cell_config(&cell)?;
        }
        Ok(())
    }

    /// Axis values of every cell, last axis varying fastest.
    pub fn cells(&self) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new()];
        for a in &self.axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    a.values.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        out
    }

    /// The config with one cell's axis values applied.
    pub fn cell_config(&self, values: &[f64]) -> Result<ExperimentConfig> {
        let mut c = self.clone();
        c.axes.clear();
        for (a, &v) in self.axes.iter().zip(values) {
            apply_axis(&mut c, &a.name, v)?;
        }
        if c.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if let Generator::Linear { spec } = &c.generator {
            spec.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(c)
    }

    pub fn axis_names(&self) -> Vec<String> {
        self.axes.iter().map(|a| a.name.clone()).collect()
    }
}
