//! Minimal numerical kernels: matrices, dense layers with manual
//! backpropagation, and forward-only convolution, pooling, normalization and
//! attention.
//!
//! Storage is `f32`; every reduction (dot products, sums, variances)
//! accumulates in `f64` in a fixed order, so results are bit-identical across
//! runs and across the vectorized kernel variants.

mod activation;
mod attention;
mod conv;
mod dense;
pub mod gemm;
mod matrix;
mod named;
mod norm;

pub use activation::Activation;
pub use attention::{multihead_attention, multihead_attention_probed, AttentionParams};
pub use conv::{conv2d_forward, maxpool2_forward, ConvWeights};
pub use dense::{DenseBatchCache, DenseGrads, DenseLayer};
pub use matrix::{Matrix2D, Tensor3};
pub use named::{NamedTensor, ParamKind};
pub use norm::{batchnorm_inference, layernorm, layernorm_rows, BatchNormParams, LayerNormParams};
