use std::f64::consts::PI;
use std::ops::Range;

use ndarray::{s, Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

/// Frictionless single pendulum observed through a frozen random-feature map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PendulumSpec {
    pub mass: f64,
    pub length: f64,
    pub gravity: f64,
    pub sample_rate: f64,
    pub frames_per_experiment: usize,
    pub n_experiments: usize,
    pub obs_dim: usize,
    pub frames_per_window: usize,
    /// RK4 steps per frame interval.
    pub substeps: usize,
    /// Gain of the random projection inside the observation sigmoid.
    pub obs_gain: f64,
    pub seed: u64,
}

impl Default for PendulumSpec {
    fn default() -> Self {
        PendulumSpec {
            mass: 1.0,
            length: 0.5,
            gravity: 9.81,
            sample_rate: 60.0,
            frames_per_experiment: 60,
            n_experiments: 1100,
            obs_dim: 784,
            frames_per_window: 2,
            substeps: 16,
            obs_gain: 3.0,
            seed: 0,
        }
    }
}

/// Relative energy drift above which a trajectory is rejected.
pub const MAX_ENERGY_DRIFT: f64 = 1e-2;

impl PendulumSpec {
    fn validate(&self) -> Result<()> {
        let positive = [self.mass, self.length, self.gravity, self.sample_rate];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::domain("mass, length, gravity and sample_rate must be positive"));
        }
        if self.substeps == 0 || self.frames_per_window == 0 || self.obs_dim == 0 {
            return Err(Error::domain("substeps, frames_per_window and obs_dim must be positive"));
        }
        if self.frames_per_experiment < 2 * self.frames_per_window {
            return Err(Error::domain("an experiment must hold at least two windows"));
        }
        Ok(())
    }

    /// Total energy with the potential measured from the resting position.
    pub fn energy(&self, theta: f64, omega: f64) -> f64 {
        let half = (0.5 * theta).sin();
        0.5 * self.mass * self.length * self.length * omega * omega
            + 2.0 * self.mass * self.gravity * self.length * half * half
    }

    /// Energy of the unstable upright rest state.
    pub fn separatrix_energy(&self) -> f64 {
        2.0 * self.mass * self.gravity * self.length
    }

    pub fn small_angle_period(&self) -> f64 {
        2.0 * PI * (self.length / self.gravity).sqrt()
    }

    /// Integrates one experiment from `(theta0, omega0)` and returns the
    /// unwrapped angles, angular velocities and the maximum relative energy
    /// drift.
    pub fn integrate(&self, theta0: f64, omega0: f64) -> Result<(Vec<f64>, Vec<f64>, f64)> {
        self.validate()?;
        let k = self.gravity / self.length;
        let h = 1.0 / (self.sample_rate * self.substeps as f64);
        let rhs = |th: f64, om: f64| (om, -k * th.sin());
        let (mut th, mut om) = (theta0, omega0);
        let e0 = self.energy(th, om);
        let scale = e0.max(1e-12 * self.separatrix_energy());
        let mut thetas = Vec::with_capacity(self.frames_per_experiment);
        let mut omegas = Vec::with_capacity(self.frames_per_experiment);
        let mut drift = 0.0_f64;
        for frame in 0..self.frames_per_experiment {
            if frame > 0 {
                for _ in 0..self.substeps {
                    let (a1, b1) = rhs(th, om);
                    let (a2, b2) = rhs(th + 0.5 * h * a1, om + 0.5 * h * b1);
                    let (a3, b3) = rhs(th + 0.5 * h * a2, om + 0.5 * h * b2);
                    let (a4, b4) = rhs(th + h * a3, om + h * b3);
                    th += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
                    om += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
                }
            }
            drift = drift.max((self.energy(th, om) - e0).abs() / scale);
            thetas.push(th);
            omegas.push(om);
        }
        if drift > MAX_ENERGY_DRIFT {
            return Err(Error::Integrator {
                drift,
                limit: MAX_ENERGY_DRIFT,
            });
        }
        Ok((thetas, omegas, drift))
    }
}

/// Wraps an angle to (−π, π].
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Simulated experiments; row `e * frames + f` of `observations` is frame `f`
/// of experiment `e`.
#[derive(Debug, Clone)]
pub struct PendulumData {
    pub spec: PendulumSpec,
    /// Wrapped angles, experiments × frames.
    pub theta: Array2<f64>,
    pub omega: Array2<f64>,
    pub observations: Array2<f64>,
    pub max_energy_drift: f64,
}

/// Past/future window pairs with the state at the last past frame.
#[derive(Debug, Clone)]
pub struct PendulumWindows {
    pub x: Array2<f64>,
    pub y: Array2<f64>,
    pub theta: Array1<f64>,
    pub omega: Array1<f64>,
}

impl PendulumData {
    /// Builds X from frames t..t+w and Y from frames t+w..t+2w for every
    /// admissible t in the given experiments, where w is the window length.
    pub fn windows(&self, experiments: Range<usize>) -> PendulumWindows {
        let w = self.spec.frames_per_window;
        let frames = self.spec.frames_per_experiment;
        let d = self.spec.obs_dim;
        let per = frames + 1 - 2 * w;
        let rows = experiments.len() * per;
        let mut x = Array2::zeros((rows, w * d));
        let mut y = Array2::zeros((rows, w * d));
        let mut theta = Array1::zeros(rows);
        let mut omega = Array1::zeros(rows);
        let mut r = 0;
        for e in experiments {
            for t in 0..per {
                for j in 0..w {
                    let base = e * frames + t + j;
                    x.slice_mut(s![r, j * d..(j + 1) * d]).assign(&self.observations.row(base));
                    y.slice_mut(s![r, j * d..(j + 1) * d]).assign(&self.observations.row(base + w));
                }
                theta[r] = self.theta[[e, t + w - 1]];
                omega[r] = self.omega[[e, t + w - 1]];
                r += 1;
            }
        }
        PendulumWindows { x, y, theta, omega }
    }
}

/// Frozen observation map `sigmoid(gain·(sin θ, cos θ)·W + b)`.
fn observation_map(spec: &PendulumSpec) -> (Array2<f64>, Array1<f64>) {
    let mut rng = rng_from_seed(derive_seed(spec.seed, &[1]));
    let w = Array2::from_shape_simple_fn((2, spec.obs_dim), || spec.obs_gain * rng.sample::<f64, _>(StandardNormal));
    let b = Array1::from_shape_simple_fn(spec.obs_dim, || rng.sample::<f64, _>(StandardNormal));
    (w, b)
}

/// Samples initial conditions with energy uniform on [0, 2·E_sep), so that
/// both librating and rotating trajectories occur, and integrates them.
pub fn simulate_pendulum(spec: &PendulumSpec) -> Result<PendulumData> {
    spec.validate()?;
    let mut rng = rng_from_seed(derive_seed(spec.seed, &[0]));
    let frames = spec.frames_per_experiment;
    let mut theta = Array2::zeros((spec.n_experiments, frames));
    let mut omega = Array2::zeros((spec.n_experiments, frames));
    let mut max_drift = 0.0_f64;
    let inertia = spec.mass * spec.length * spec.length;
    for e in 0..spec.n_experiments {
        let energy = rng.random_range(0.0..2.0 * spec.separatrix_energy());
        let (th0, om0) = loop {
            let th = PI - rng.random_range(0.0..2.0 * PI);
            let v = spec.energy(th, 0.0);
            if v <= energy {
                let speed = (2.0 * (energy - v) / inertia).sqrt();
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                break (th, sign * speed);
            }
        };
        let (ths, oms, drift) = spec.integrate(th0, om0)?;
        max_drift = max_drift.max(drift);
        for f in 0..frames {
            theta[[e, f]] = wrap_angle(ths[f]);
            omega[[e, f]] = oms[f];
        }
    }
    let (w, b) = observation_map(spec);
    let mut features = Array2::zeros((spec.n_experiments * frames, 2));
    for (i, th) in theta.iter().enumerate() {
        features[[i, 0]] = th.sin();
        features[[i, 1]] = th.cos();
    }
    let mut observations = features.dot(&w) + &b;
    observations.mapv_inplace(crate::nncore::sigmoid);
    Ok(PendulumData {
        spec: spec.clone(),
        theta,
        omega,
        observations,
        max_energy_drift: max_drift,
    })
}
