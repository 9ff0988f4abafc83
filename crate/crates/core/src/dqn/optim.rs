use alloc::vec::Vec;

use super::{QGrads, QNetwork};
use crate::error::{ensure, Result};

/// Adam moments for every parameter of a [`QNetwork`].
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(net: &QNetwork, learning_rate: f64) -> Self {
        let shapes: Vec<usize> = net.parameters().map(|p| p.len()).collect();
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: shapes.iter().map(|n| alloc::vec![0.0; *n]).collect(),
            v: shapes.iter().map(|n| alloc::vec![0.0; *n]).collect(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam step along `grads`.
    pub fn step(&mut self, net: &mut QNetwork, grads: &QGrads) -> Result<()> {
        let grad_slices: Vec<&[f32]> = grads
            .iter()
            .flat_map(|g| [g.weights.data(), g.bias.as_slice()])
            .collect();
        ensure!(grad_slices.len() == self.m.len(), "gradient layout does not match optimizer");
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - libm::pow(self.beta1, t as f64);
        let c2 = 1.0 - libm::pow(self.beta2, t as f64);
        for (((param, g), m), v) in net.parameters_mut().zip(grad_slices).zip(&mut self.m).zip(&mut self.v) {
            ensure!(param.len() == g.len(), "gradient length mismatch");
            for i in 0..param.len() {
                let gi = g[i] as f64;
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * gi;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * gi * gi;
                let update = self.learning_rate * (m[i] / c1) / (libm::sqrt(v[i] / c2) + self.epsilon);
                param[i] = (param[i] as f64 - update) as f32;
            }
        }
        Ok(())
    }
}
