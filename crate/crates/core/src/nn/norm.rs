use alloc::vec::Vec;

use super::{Matrix2D, Tensor3};
use crate::error::{ensure, Result};

/// Frozen batch-normalization statistics and affine parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormParams {
    pub mean: Vec<f32>,
    pub var: Vec<f32>,
    pub gamma: Vec<f32>,
    pub beta: Vec<f32>,
    pub eps: f32,
}

impl BatchNormParams {
    /// Identity statistics: zero mean, unit variance, unit gain, zero shift.
    pub fn identity(channels: usize, eps: f32) -> Self {
        Self {
            mean: alloc::vec![0.0; channels],
            var: alloc::vec![1.0; channels],
            gamma: alloc::vec![1.0; channels],
            beta: alloc::vec![0.0; channels],
            eps,
        }
    }

    pub fn channels(&self) -> usize {
        self.mean.len()
    }
}

/// Inference-mode batch normalization: `(x−mean)/√(var+eps)·gamma+beta` per
/// channel.
pub fn batchnorm_inference(input: &Tensor3, params: &BatchNormParams) -> Result<Tensor3> {
    let c = input.channels();
    ensure!(
        params.mean.len() == c && params.var.len() == c && params.gamma.len() == c && params.beta.len() == c,
        "batch norm parameters must have one entry per channel ({c})"
    );
    ensure!(params.var.iter().all(|v| *v >= 0.0), "batch norm variance must be non-negative");
    ensure!(params.eps >= 0.0, "batch norm epsilon must be non-negative");
    let mut out = input.clone();
    for ch in 0..c {
        let mean = params.mean[ch] as f64;
        let inv = 1.0 / libm::sqrt(params.var[ch] as f64 + params.eps as f64);
        let gamma = params.gamma[ch] as f64;
        let beta = params.beta[ch] as f64;
        for v in out.plane_mut(ch) {
            *v = ((*v as f64 - mean) * inv * gamma + beta) as f32;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNormParams {
    pub gamma: Vec<f32>,
    pub beta: Vec<f32>,
    pub eps: f32,
}

impl LayerNormParams {
    pub fn identity(dim: usize, eps: f32) -> Self {
        Self {
            gamma: alloc::vec![1.0; dim],
            beta: alloc::vec![0.0; dim],
            eps,
        }
    }
}

fn layernorm_into(input: &[f32], params: &LayerNormParams, out: &mut [f32]) {
    let n = input.len() as f64;
    let mean = input.iter().map(|v| *v as f64).sum::<f64>() / n;
    let var = input.iter().map(|v| (*v as f64 - mean) * (*v as f64 - mean)).sum::<f64>() / n;
    let denom = libm::sqrt(var + params.eps as f64);
    // Constant input with eps = 0 has no scale; treat the normalized value as 0.
    let inv = if denom > 0.0 { 1.0 / denom } else { 0.0 };
    for (i, o) in out.iter_mut().enumerate() {
        *o = ((input[i] as f64 - mean) * inv * params.gamma[i] as f64 + params.beta[i] as f64) as f32;
    }
}

/// Normalizes a vector to zero mean and unit (population) variance, then
/// applies the affine map.
pub fn layernorm(input: &[f32], params: &LayerNormParams) -> Result<Vec<f32>> {
    ensure!(
        input.len() == params.gamma.len() && input.len() == params.beta.len(),
        "layer norm length mismatch: input {}, gamma {}, beta {}",
        input.len(),
        params.gamma.len(),
        params.beta.len()
    );
    ensure!(!input.is_empty(), "layer norm of an empty vector");
    let mut out = alloc::vec![0.0; input.len()];
    layernorm_into(input, params, &mut out);
    Ok(out)
}

/// [`layernorm`] applied to every row.
pub fn layernorm_rows(input: &Matrix2D, params: &LayerNormParams) -> Result<Matrix2D> {
    ensure!(
        input.cols() == params.gamma.len() && input.cols() == params.beta.len(),
        "layer norm width mismatch: rows have {} columns, gamma {}",
        input.cols(),
        params.gamma.len()
    );
    let mut out = Matrix2D::zeros(input.rows(), input.cols());
    for r in 0..input.rows() {
        layernorm_into(input.row(r), params, out.row_mut(r));
    }
    Ok(out)
}
