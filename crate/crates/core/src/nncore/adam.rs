use crate::error::{Error, Result};

/// Bias-corrected Adam over a fixed list of parameter buffers.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub step: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(lr: f64) -> Self {
        AdamState {
            step: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// Applies one update. Moments are allocated on the first call and the
    /// buffer layout must stay the same afterwards. A non-finite gradient
    /// aborts the step before any parameter changes.
    pub fn update(&mut self, params: Vec<&mut [f64]>, grads: &[&[f64]]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::shape(format!("{} parameter buffers, {} gradients", params.len(), grads.len())));
        }
        for (p, g) in params.iter().zip(grads) {
            if p.len() != g.len() {
                return Err(Error::shape("parameter and gradient buffer sizes differ"));
            }
        }
        if grads.iter().any(|g| g.iter().any(|v| !v.is_finite())) {
            return Err(Error::Training {
                step: self.step + 1,
                what: "non-finite gradient".into(),
            });
        }
        if self.m.is_empty() {
            self.m = grads.iter().map(|g| vec![0.0; g.len()]).collect();
            self.v = self.m.clone();
        } else if self.m.len() != grads.len() || self.m.iter().zip(grads).any(|(m, g)| m.len() != g.len()) {
            return Err(Error::shape("parameter layout changed between Adam steps"));
        }
        self.step += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.step as i32);
        let c2 = 1.0 - b2.powi(self.step as i32);
        for (((p, g), m), v) in params.into_iter().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = b1 * m[i] + (1.0 - b1) * gi;
                v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                p[i] -= self.lr * mh / (vh.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_keeps_parameters() {
        let mut p = vec![1.0, -2.0];
        let mut adam = AdamState::new(0.1);
        adam.update(vec![&mut p], &[&[0.0, 0.0]]).unwrap();
        assert_eq!(p, vec![1.0, -2.0]);
    }

    #[test]
    fn first_step_moves_by_lr() {
        // m̂ = g, v̂ = g², so the step is lr·g/(|g| + ε).
        let mut p = vec![0.0, 0.0];
        let mut adam = AdamState::new(0.01);
        adam.update(vec![&mut p], &[&[3.0, -0.5]]).unwrap();
        assert!((p[0] + 0.01 * 3.0 / (3.0 + 1e-8)).abs() < 1e-15);
        assert!((p[1] - 0.01 * 0.5 / (0.5 + 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn nan_gradient_reports_step() {
        let mut p = vec![0.0];
        let mut adam = AdamState::new(0.01);
        adam.update(vec![&mut p], &[&[1.0]]).unwrap();
        match adam.update(vec![&mut p], &[&[f64::NAN]]) {
            Err(Error::Training { step, .. }) => assert_eq!(step, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn identical_runs_agree() {
        let run = || {
            let mut p = vec![0.3, 0.1];
            let mut adam = AdamState::new(0.05);
            for k in 0..20 {
                let g = [p[0] - 1.0 + k as f64 * 0.01, 2.0 * p[1]];
                adam.update(vec![&mut p], &[&g]).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
    }
}
