use serde::{Deserialize, Serialize};

use super::{Grads, Parameterized};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Bias-corrected Adam moments for one [`Parameterized`] value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub config: AdamConfig,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
    step: u64,
}

impl AdamState {
    pub fn new<P: Parameterized + ?Sized>(params: &P, config: AdamConfig) -> Self {
        let zeros: Vec<Vec<f64>> = params.param_slices().iter().map(|s| vec![0.0; s.len()]).collect();
        Self {
            config,
            first_moment: zeros.clone(),
            second_moment: zeros,
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn moments(&self) -> (&[Vec<f64>], &[Vec<f64>]) {
        (&self.first_moment, &self.second_moment)
    }

    /// One descent step on `params` along `grads`.
    pub fn apply<P: Parameterized + ?Sized>(&mut self, params: &mut P, grads: &Grads) -> Result<()> {
        let mut slices = params.param_slices_mut();
        let shapes_ok = slices.len() == grads.len()
            && slices.len() == self.first_moment.len()
            && slices
                .iter()
                .zip(grads)
                .zip(&self.first_moment)
                .all(|((p, g), m)| p.len() == g.len() && p.len() == m.len());
        if !shapes_ok {
            return Err(Error::Config(
                "adam: parameter, gradient and moment shapes differ".into(),
            ));
        }
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        let step_size = learning_rate / c1;
        let inv_sqrt_c2 = 1.0 / c2.sqrt();
        for (((p, g), m), v) in slices
            .iter_mut()
            .zip(grads)
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            for (((pi, &gi), mi), vi) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                *mi = beta1 * *mi + (1.0 - beta1) * gi;
                *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                *pi -= step_size * *mi / (vi.sqrt() * inv_sqrt_c2 + epsilon);
            }
        }
        Ok(())
    }
}
