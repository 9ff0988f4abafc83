use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::VitalConfig;
use crate::error::{ensure, Error, Result};
use crate::nn::{
    Activation, AttentionParams, BatchNormParams, ConvWeights, DenseLayer, LayerNormParams, Matrix2D, NamedTensor,
    ParamKind,
};
use crate::rng::Rng;

const EMBED_STD: f64 = 0.02;

/// One residual stem block: two 3×3 convolutions with batch norm on the main
/// path and a 1×1 projection on the skip path.
#[derive(Debug, Clone, PartialEq)]
pub struct StemBlock {
    pub conv1: ConvWeights,
    pub bn1: BatchNormParams,
    pub conv2: ConvWeights,
    pub bn2: BatchNormParams,
    pub residual: ConvWeights,
}

/// Per-modality convolutional stem.
#[derive(Debug, Clone, PartialEq)]
pub struct StemWeights {
    pub blocks: Vec<StemBlock>,
    /// Final 3×3 convolution up to `embed_dim` channels.
    pub project: ConvWeights,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderLayer {
    pub ln1: LayerNormParams,
    pub attention: AttentionParams,
    pub ln2: LayerNormParams,
    pub ffn1: DenseLayer,
    pub ffn2: DenseLayer,
}

/// `LN → dense(GELU) → LN → dense` readout of the class token.
#[derive(Debug, Clone, PartialEq)]
pub struct Head {
    pub ln_in: LayerNormParams,
    pub hidden: DenseLayer,
    pub ln_hidden: LayerNormParams,
    pub out: DenseLayer,
}

/// All detector parameters, in the layout fixed by a [`VitalConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct VitalWeights {
    pub config: VitalConfig,
    /// Visual, thermal and LiDAR stems, in that order.
    pub stems: [StemWeights; 3],
    pub cls_token: Vec<f32>,
    pub pos_embed: Matrix2D,
    pub layers: Vec<EncoderLayer>,
    pub objectness_head: Head,
    pub bbox_head: Head,
}

impl StemWeights {
    fn zeros(config: &VitalConfig) -> Self {
        let mut blocks = Vec::with_capacity(config.stem_widths.len());
        let mut in_ch = 1;
        for &out_ch in &config.stem_widths {
            blocks.push(StemBlock {
                conv1: ConvWeights::zeros(in_ch, out_ch, 3),
                bn1: BatchNormParams::identity(out_ch, config.bn_eps),
                conv2: ConvWeights::zeros(out_ch, out_ch, 3),
                bn2: BatchNormParams::identity(out_ch, config.bn_eps),
                residual: ConvWeights::zeros(in_ch, out_ch, 1),
            });
            in_ch = out_ch;
        }
        Self {
            blocks,
            project: ConvWeights::zeros(in_ch, config.embed_dim, 3),
        }
    }
}

impl Head {
    fn zeros(config: &VitalConfig, outputs: usize) -> Self {
        let d = config.token_dim();
        Self {
            ln_in: LayerNormParams::identity(d, config.ln_eps),
            hidden: DenseLayer::zeros(d, config.head_hidden, Activation::Gelu),
            ln_hidden: LayerNormParams::identity(config.head_hidden, config.ln_eps),
            out: DenseLayer::zeros(config.head_hidden, outputs, Activation::Identity),
        }
    }
}

type Visitor<'a> = dyn FnMut(&str, &[usize], ParamKind, &mut [f32]) + 'a;

fn visit_conv(prefix: &str, c: &mut ConvWeights, f: &mut Visitor<'_>) {
    let shape = [c.out_channels, c.in_channels, c.kernel, c.kernel];
    let fan_in = c.in_channels * c.kernel * c.kernel;
    f(&format!("{prefix}.weight"), &shape, ParamKind::ConvWeight { fan_in }, &mut c.weights);
    f(&format!("{prefix}.bias"), &[c.out_channels], ParamKind::Bias, &mut c.bias);
}

fn visit_bn(prefix: &str, b: &mut BatchNormParams, f: &mut Visitor<'_>) {
    let shape = [b.channels()];
    f(&format!("{prefix}.mean"), &shape, ParamKind::RunningMean, &mut b.mean);
    f(&format!("{prefix}.var"), &shape, ParamKind::RunningVar, &mut b.var);
    f(&format!("{prefix}.gamma"), &shape, ParamKind::NormGain, &mut b.gamma);
    f(&format!("{prefix}.beta"), &shape, ParamKind::NormShift, &mut b.beta);
}

fn visit_ln(prefix: &str, l: &mut LayerNormParams, f: &mut Visitor<'_>) {
    let shape = [l.gamma.len()];
    f(&format!("{prefix}.gamma"), &shape, ParamKind::NormGain, &mut l.gamma);
    f(&format!("{prefix}.beta"), &shape, ParamKind::NormShift, &mut l.beta);
}

pub(crate) fn visit_dense(prefix: &str, d: &mut DenseLayer, f: &mut Visitor<'_>) {
    let (rows, cols) = d.weights.shape();
    f(
        &format!("{prefix}.weight"),
        &[rows, cols],
        ParamKind::DenseWeight { fan_in: cols },
        d.weights.data_mut(),
    );
    f(&format!("{prefix}.bias"), &[rows], ParamKind::Bias, &mut d.bias);
}

fn visit_head(prefix: &str, h: &mut Head, f: &mut Visitor<'_>) {
    visit_ln(&format!("{prefix}.ln_in"), &mut h.ln_in, f);
    visit_dense(&format!("{prefix}.hidden"), &mut h.hidden, f);
    visit_ln(&format!("{prefix}.ln_hidden"), &mut h.ln_hidden, f);
    visit_dense(&format!("{prefix}.out"), &mut h.out, f);
}

impl VitalWeights {
    /// Every tensor zero except batch-norm variances and norm gains, which
    /// are one.
    pub fn zeros(config: &VitalConfig) -> Result<Self> {
        config.validate()?;
        let d = config.token_dim();
        let layers = (0..config.encoder_layers)
            .map(|_| EncoderLayer {
                ln1: LayerNormParams::identity(d, config.ln_eps),
                attention: AttentionParams::zeros(d),
                ln2: LayerNormParams::identity(d, config.ln_eps),
                ffn1: DenseLayer::zeros(d, config.ffn_hidden, Activation::Gelu),
                ffn2: DenseLayer::zeros(config.ffn_hidden, d, Activation::Identity),
            })
            .collect();
        Ok(Self {
            config: config.clone(),
            stems: core::array::from_fn(|_| StemWeights::zeros(config)),
            cls_token: vec![0.0; d],
            pos_embed: Matrix2D::zeros(config.num_tokens(), d),
            layers,
            objectness_head: Head::zeros(config, 1),
            bbox_head: Head::zeros(config, 4),
        })
    }

    /// Calls `f` on every parameter tensor in a fixed order with its dotted
    /// name, shape and role.
    pub fn visit_params_mut(&mut self, f: &mut Visitor<'_>) {
        const STEM_NAMES: [&str; 3] = ["visual", "thermal", "lidar"];
        for (stem, name) in self.stems.iter_mut().zip(STEM_NAMES) {
            for (i, b) in stem.blocks.iter_mut().enumerate() {
                let p = format!("stem.{name}.block{i}");
                visit_conv(&format!("{p}.conv1"), &mut b.conv1, f);
                visit_bn(&format!("{p}.bn1"), &mut b.bn1, f);
                visit_conv(&format!("{p}.conv2"), &mut b.conv2, f);
                visit_bn(&format!("{p}.bn2"), &mut b.bn2, f);
                visit_conv(&format!("{p}.residual"), &mut b.residual, f);
            }
            visit_conv(&format!("stem.{name}.project"), &mut stem.project, f);
        }
        let d = self.cls_token.len();
        f("cls_token", &[1, d], ParamKind::Embedding, &mut self.cls_token);
        let (rows, cols) = self.pos_embed.shape();
        f("pos_embed", &[rows, cols], ParamKind::Embedding, self.pos_embed.data_mut());
        for (i, l) in self.layers.iter_mut().enumerate() {
            let p = format!("encoder.{i}");
            visit_ln(&format!("{p}.ln1"), &mut l.ln1, f);
            let [q, k, v, o] = l.attention.layers_mut();
            visit_dense(&format!("{p}.attn.query"), q, f);
            visit_dense(&format!("{p}.attn.key"), k, f);
            visit_dense(&format!("{p}.attn.value"), v, f);
            visit_dense(&format!("{p}.attn.output"), o, f);
            visit_ln(&format!("{p}.ln2"), &mut l.ln2, f);
            visit_dense(&format!("{p}.ffn1"), &mut l.ffn1, f);
            visit_dense(&format!("{p}.ffn2"), &mut l.ffn2, f);
        }
        visit_head("head.objectness", &mut self.objectness_head, f);
        visit_head("head.bbox", &mut self.bbox_head, f);
    }

    pub fn parameter_count(&self) -> usize {
        let mut n = 0;
        self.clone().visit_params_mut(&mut |_, _, _, data| n += data.len());
        n
    }

    pub fn is_finite(&self) -> bool {
        let mut ok = true;
        self.clone()
            .visit_params_mut(&mut |_, _, _, data| ok &= data.iter().all(|v| v.is_finite()));
        ok
    }

    /// Zeroes every attention and feed-forward projection (weights and
    /// biases), which turns each encoder layer into the identity map.
    pub fn zero_encoder_projections(&mut self) {
        for l in &mut self.layers {
            let [q, k, v, o] = l.attention.layers_mut();
            for d in [q, k, v, o, &mut l.ffn1, &mut l.ffn2] {
                d.weights.data_mut().fill(0.0);
                d.bias.fill(0.0);
            }
        }
    }

    pub fn to_named(&self) -> Vec<NamedTensor> {
        let mut out = Vec::new();
        self.clone().visit_params_mut(&mut |name, shape, _, data| {
            out.push(NamedTensor {
                name: String::from(name),
                shape: shape.to_vec(),
                data: data.to_vec(),
            })
        });
        out
    }

    /// Rebuilds weights from named tensors. Every expected tensor must be
    /// present exactly once with the expected shape and finite values.
    pub fn from_named(config: &VitalConfig, tensors: &[NamedTensor]) -> Result<Self> {
        let mut by_name = BTreeMap::new();
        for t in tensors {
            ensure!(t.data.len() == t.numel(), "tensor {} payload does not match its shape", t.name);
            ensure!(
                by_name.insert(t.name.as_str(), t).is_none(),
                "duplicate tensor name {}",
                t.name
            );
        }
        let mut weights = Self::zeros(config)?;
        let mut failure: Option<Error> = None;
        weights.visit_params_mut(&mut |name, shape, _, data| {
            if failure.is_some() {
                return;
            }
            match by_name.remove(name) {
                None => failure = Some(Error::contract(format!("missing tensor {name}"))),
                Some(t) if t.shape != shape => {
                    failure = Some(Error::contract(format!(
                        "tensor {name} has shape {:?}, expected {shape:?}",
                        t.shape
                    )))
                }
                Some(t) if !t.data.iter().all(|v| v.is_finite()) => {
                    failure = Some(Error::contract(format!("tensor {name} holds non-finite values")))
                }
                Some(t) => data.copy_from_slice(&t.data),
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        if let Some(extra) = by_name.keys().next() {
            return Err(Error::contract(format!("unexpected tensor {extra}")));
        }
        Ok(weights)
    }
}

/// Random initialization: Kaiming-normal convolutions (std `√(2/fan_in)`),
/// truncated-normal (std 0.02) embeddings and dense projections, zero
/// biases, identity normalization.
pub fn init_weights(config: &VitalConfig, seed: u64) -> Result<VitalWeights> {
    let mut weights = VitalWeights::zeros(config)?;
    let mut rng = Rng::new(seed);
    weights.visit_params_mut(&mut |_, _, kind, data| match kind {
        ParamKind::ConvWeight { fan_in } => {
            let std = libm::sqrt(2.0 / fan_in as f64);
            data.iter_mut().for_each(|v| *v = (rng.normal() * std) as f32);
        }
        ParamKind::DenseWeight { .. } | ParamKind::Embedding => {
            data.iter_mut().for_each(|v| *v = rng.truncated_normal(EMBED_STD) as f32);
        }
        _ => {}
    });
    Ok(weights)
}
