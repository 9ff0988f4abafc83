use alloc::vec;
use alloc::vec::Vec;

use super::gemm::{self, Bias};
use super::{Activation, Matrix2D};
use crate::error::{ensure, Result};

/// Fully connected layer `y = act(W·x + b)` with `W` stored `out×in`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Matrix2D,
    pub bias: Vec<f32>,
    pub activation: Activation,
}

/// Gradients of a scalar loss with respect to a dense layer.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub weights: Matrix2D,
    pub bias: Vec<f32>,
    /// Row-major `batch×in`; a single vector for the unbatched call.
    pub input: Vec<f32>,
}

/// What a batched forward pass keeps around for the backward pass.
#[derive(Debug, Clone)]
pub struct DenseBatchCache {
    pub input: Matrix2D,
    pub pre_activation: Matrix2D,
}

impl DenseLayer {
    pub fn new(weights: Matrix2D, bias: Vec<f32>, activation: Activation) -> Result<Self> {
        ensure!(
            bias.len() == weights.rows(),
            "bias length {} does not match {} output units",
            bias.len(),
            weights.rows()
        );
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self {
            weights: Matrix2D::zeros(outputs, inputs),
            bias: vec![0.0; outputs],
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.rows()
    }

    fn pre_activation(&self, input: &[f32]) -> Vec<f64> {
        (0..self.outputs())
            .map(|o| gemm::dot(self.weights.row(o), input) + self.bias[o] as f64)
            .collect()
    }

    pub fn forward(&self, input: &[f32]) -> Result<Vec<f32>> {
        ensure!(
            input.len() == self.inputs(),
            "dense input has length {}, layer expects {}",
            input.len(),
            self.inputs()
        );
        Ok(self
            .pre_activation(input)
            .into_iter()
            .map(|z| self.activation.apply(z as f32 as f64) as f32)
            .collect())
    }

    pub fn backward(&self, input: &[f32], grad_out: &[f32]) -> Result<DenseGrads> {
        ensure!(
            input.len() == self.inputs(),
            "dense input has length {}, layer expects {}",
            input.len(),
            self.inputs()
        );
        ensure!(
            grad_out.len() == self.outputs(),
            "output gradient has length {}, layer has {} outputs",
            grad_out.len(),
            self.outputs()
        );
        let grad_pre: Vec<f32> = self
            .pre_activation(input)
            .into_iter()
            .zip(grad_out)
            .map(|(z, g)| (*g as f64 * self.activation.derivative(z as f32 as f64)) as f32)
            .collect();
        let weights = Matrix2D::from_fn(self.outputs(), self.inputs(), |o, i| {
            (grad_pre[o] as f64 * input[i] as f64) as f32
        });
        let grad_in = (0..self.inputs())
            .map(|i| {
                let mut acc = 0.0f64;
                for (o, g) in grad_pre.iter().enumerate() {
                    acc += *g as f64 * self.weights.get(o, i) as f64;
                }
                acc as f32
            })
            .collect();
        Ok(DenseGrads {
            weights,
            bias: grad_pre,
            input: grad_in,
        })
    }

    /// Forward pass over the rows of `input` (`batch×in`).
    pub fn forward_batch(&self, input: &Matrix2D) -> Result<(Matrix2D, DenseBatchCache)> {
        ensure!(
            input.cols() == self.inputs(),
            "dense batch has {} columns, layer expects {}",
            input.cols(),
            self.inputs()
        );
        let batch = input.rows();
        let wt = self.weights.transpose();
        let mut pre = Matrix2D::zeros(batch, self.outputs());
        gemm::gemm(
            input.data(),
            wt.data(),
            batch,
            self.inputs(),
            self.outputs(),
            Bias::PerCol(&self.bias),
            pre.data_mut(),
        );
        let mut out = pre.clone();
        for v in out.data_mut() {
            *v = self.activation.apply(*v as f64) as f32;
        }
        Ok((
            out,
            DenseBatchCache {
                input: input.clone(),
                pre_activation: pre,
            },
        ))
    }

    /// Backward pass matching [`DenseLayer::forward_batch`]. Weight and bias
    /// gradients are summed over the batch.
    pub fn backward_batch(&self, cache: &DenseBatchCache, grad_out: &Matrix2D) -> Result<DenseGrads> {
        ensure!(
            grad_out.shape() == cache.pre_activation.shape(),
            "output gradient shape {:?} does not match forward output {:?}",
            grad_out.shape(),
            cache.pre_activation.shape()
        );
        let batch = grad_out.rows();
        let mut grad_pre = grad_out.clone();
        for (g, z) in grad_pre.data_mut().iter_mut().zip(cache.pre_activation.data()) {
            *g = (*g as f64 * self.activation.derivative(*z as f64)) as f32;
        }
        let grad_pre_t = grad_pre.transpose();
        let mut weights = Matrix2D::zeros(self.outputs(), self.inputs());
        gemm::gemm(
            grad_pre_t.data(),
            cache.input.data(),
            self.outputs(),
            batch,
            self.inputs(),
            Bias::None,
            weights.data_mut(),
        );
        let bias = (0..self.outputs())
            .map(|o| grad_pre_t.row(o).iter().map(|v| *v as f64).sum::<f64>() as f32)
            .collect();
        let mut input = vec![0.0; batch * self.inputs()];
        gemm::gemm(
            grad_pre.data(),
            self.weights.data(),
            batch,
            self.outputs(),
            self.inputs(),
            Bias::None,
            &mut input,
        );
        Ok(DenseGrads {
            weights,
            bias,
            input,
        })
    }
}
