use alloc::vec;
use alloc::vec::Vec;

use super::gemm::{self, Bias};
use super::{DenseLayer, Matrix2D};
use crate::error::{ensure, Result};

/// Query/key/value/output projections of one attention block. Each is a
/// `d×d` identity-activation dense layer.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    pub query: DenseLayer,
    pub key: DenseLayer,
    pub value: DenseLayer,
    pub output: DenseLayer,
}

impl AttentionParams {
    pub fn zeros(dim: usize) -> Self {
        let z = || DenseLayer::zeros(dim, dim, super::Activation::Identity);
        Self {
            query: z(),
            key: z(),
            value: z(),
            output: z(),
        }
    }

    pub fn layers(&self) -> [&DenseLayer; 4] {
        [&self.query, &self.key, &self.value, &self.output]
    }

    pub fn layers_mut(&mut self) -> [&mut DenseLayer; 4] {
        [&mut self.query, &mut self.key, &mut self.value, &mut self.output]
    }
}

/// Scaled dot-product multi-head self-attention over the rows of `tokens`.
pub fn multihead_attention(tokens: &Matrix2D, params: &AttentionParams, heads: usize) -> Result<Matrix2D> {
    multihead_attention_probed(tokens, params, heads, &mut |_, _| {})
}

/// As [`multihead_attention`], handing each head's `n×n` attention map to
/// `probe` before it is applied to the values.
pub fn multihead_attention_probed(
    tokens: &Matrix2D,
    params: &AttentionParams,
    heads: usize,
    probe: &mut dyn FnMut(usize, &Matrix2D),
) -> Result<Matrix2D> {
    let (n, d) = tokens.shape();
    ensure!(heads > 0 && d % heads == 0, "token width {d} is not divisible by {heads} heads");
    for layer in params.layers() {
        ensure!(
            layer.inputs() == d && layer.outputs() == d,
            "attention projection is {}x{}, expected {d}x{d}",
            layer.outputs(),
            layer.inputs()
        );
    }
    let dh = d / heads;
    let scale = 1.0 / libm::sqrt(dh as f64);
    let (q, _) = params.query.forward_batch(tokens)?;
    let (k, _) = params.key.forward_batch(tokens)?;
    let (v, _) = params.value.forward_batch(tokens)?;

    let mut concat = Matrix2D::zeros(n, d);
    let mut qh = vec![0.0f32; n * dh];
    let mut kt = vec![0.0f32; dh * n];
    let mut vh = vec![0.0f32; n * dh];
    let mut ctx = vec![0.0f32; n * dh];
    let mut scores = Matrix2D::zeros(n, n);
    for h in 0..heads {
        let c0 = h * dh;
        for r in 0..n {
            qh[r * dh..(r + 1) * dh].copy_from_slice(&q.row(r)[c0..c0 + dh]);
            vh[r * dh..(r + 1) * dh].copy_from_slice(&v.row(r)[c0..c0 + dh]);
            for (j, val) in k.row(r)[c0..c0 + dh].iter().enumerate() {
                kt[j * n + r] = *val;
            }
        }
        gemm::gemm(&qh, &kt, n, dh, n, Bias::None, scores.data_mut());
        for r in 0..n {
            softmax_scaled(scores.row_mut(r), scale);
        }
        probe(h, &scores);
        gemm::gemm(scores.data(), &vh, n, n, dh, Bias::None, &mut ctx);
        for r in 0..n {
            concat.row_mut(r)[c0..c0 + dh].copy_from_slice(&ctx[r * dh..(r + 1) * dh]);
        }
    }
    let (out, _) = params.output.forward_batch(&concat)?;
    Ok(out)
}

/// In-place `softmax(scale·row)` computed in `f64`.
fn softmax_scaled(row: &mut [f32], scale: f64) {
    let max = row.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v as f64 * scale));
    let exps: Vec<f64> = row.iter().map(|v| libm::exp(*v as f64 * scale - max)).collect();
    let sum: f64 = exps.iter().sum();
    for (o, e) in row.iter_mut().zip(exps) {
        *o = (e / sum) as f32;
    }
}
