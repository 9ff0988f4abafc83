use alloc::format;
use alloc::vec::Vec;

use super::{Detection, Modality, MultimodalImage, StemWeights, VitalConfig, VitalWeights};
use crate::error::{ensure, Error, Result};
use crate::losses::BBox;
use crate::nn::{
    batchnorm_inference, conv2d_forward, layernorm, layernorm_rows, maxpool2_forward, multihead_attention_probed,
    Matrix2D, Tensor3,
};

/// Shapes and raw outputs recorded by [`forward_traced`].
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub stem_shapes: [(usize, usize, usize); 3],
    pub token_shape: (usize, usize),
    pub encoded_shape: (usize, usize),
    pub objectness_logit: f32,
    pub bbox_logits: [f32; 4],
    pub detection: Detection,
}

fn relu_in_place(t: &mut Tensor3) {
    t.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
}

/// Runs one modality plane (`1×S×S`) through its stem, giving an
/// `e_d×p×p` feature map.
pub fn stem_forward(plane: &Tensor3, stem: &StemWeights, config: &VitalConfig) -> Result<Tensor3> {
    let s = config.image_size;
    ensure!(
        plane.shape() == (1, s, s),
        "stem input must be 1x{s}x{s}, got {:?}",
        plane.shape()
    );
    ensure!(
        stem.blocks.len() == config.stem_widths.len(),
        "stem has {} blocks, config expects {}",
        stem.blocks.len(),
        config.stem_widths.len()
    );
    let mut x = plane.clone();
    for b in &stem.blocks {
        let mut main = batchnorm_inference(&conv2d_forward(&x, &b.conv1, 1, 1)?, &b.bn1)?;
        relu_in_place(&mut main);
        let mut main = batchnorm_inference(&conv2d_forward(&main, &b.conv2, 1, 1)?, &b.bn2)?;
        let skip = conv2d_forward(&x, &b.residual, 1, 0)?;
        ensure!(main.shape() == skip.shape(), "residual path shape mismatch");
        main.data_mut().iter_mut().zip(skip.data()).for_each(|(m, r)| *m = (*m + r).max(0.0));
        x = maxpool2_forward(&main)?;
    }
    let out = conv2d_forward(&x, &stem.project, 1, 1)?;
    let p = config.patch;
    ensure!(
        out.shape() == (config.embed_dim, p, p),
        "stem output {:?} does not match {}x{p}x{p}",
        out.shape(),
        config.embed_dim
    );
    Ok(out)
}

/// Concatenates the three stem outputs channel-wise, flattens the spatial
/// grid row-major into tokens, prepends the class token and adds the
/// positional embedding.
pub fn assemble_tokens(stems: [&Tensor3; 3], weights: &VitalWeights) -> Result<Matrix2D> {
    let c = &weights.config;
    let (e, p) = (c.embed_dim, c.patch);
    for (s, m) in stems.iter().zip(Modality::ALL) {
        ensure!(
            s.shape() == (e, p, p),
            "{} stem output {:?} must be {e}x{p}x{p}",
            m.name(),
            s.shape()
        );
    }
    let d = c.token_dim();
    ensure!(weights.cls_token.len() == d, "class token must have {d} entries");
    ensure!(
        weights.pos_embed.shape() == (c.num_tokens(), d),
        "positional embedding must be {}x{d}",
        c.num_tokens()
    );
    let mut tokens = Matrix2D::zeros(c.num_tokens(), d);
    tokens.row_mut(0).copy_from_slice(&weights.cls_token);
    for (m, stem) in stems.iter().enumerate() {
        for ch in 0..e {
            let plane = stem.plane(ch);
            for (pos, v) in plane.iter().enumerate() {
                tokens.set(1 + pos, m * e + ch, *v);
            }
        }
    }
    tokens
        .data_mut()
        .iter_mut()
        .zip(weights.pos_embed.data())
        .for_each(|(t, p)| *t += p);
    Ok(tokens)
}

/// Pre-norm transformer encoder over `tokens`.
pub fn encoder_forward(tokens: &Matrix2D, weights: &VitalWeights) -> Result<Matrix2D> {
    encoder_forward_probed(tokens, weights, &mut |_, _, _| {})
}

/// Like [`encoder_forward`], also handing each layer's per-head attention
/// matrix to `probe(layer, head, weights)`.
pub fn encoder_forward_probed(
    tokens: &Matrix2D,
    weights: &VitalWeights,
    probe: &mut dyn FnMut(usize, usize, &Matrix2D),
) -> Result<Matrix2D> {
    let c = &weights.config;
    ensure!(
        tokens.shape() == (c.num_tokens(), c.token_dim()),
        "encoder input {:?} must be {}x{}",
        tokens.shape(),
        c.num_tokens(),
        c.token_dim()
    );
    let mut x = tokens.clone();
    for (i, layer) in weights.layers.iter().enumerate() {
        let h = layernorm_rows(&x, &layer.ln1)?;
        let attn = multihead_attention_probed(&h, &layer.attention, c.heads, &mut |head, a| probe(i, head, a))?;
        x.add_assign(&attn)?;
        let h = layernorm_rows(&x, &layer.ln2)?;
        let (inner, _) = layer.ffn1.forward_batch(&h)?;
        let (ffn, _) = layer.ffn2.forward_batch(&inner)?;
        x.add_assign(&ffn)?;
        check_finite(&format!("encoder.{i}"), x.data())?;
    }
    Ok(x)
}

fn check_finite(stage: &str, data: &[f32]) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(i) => Err(Error::numeric(stage, format!("non-finite value {} at flat index {i}", data[i]))),
    }
}

fn head_forward(token: &[f32], head: &super::Head, stage: &str) -> Result<Vec<f32>> {
    let h = layernorm(token, &head.ln_in)?;
    let h = head.hidden.forward(&h)?;
    let h = layernorm(&h, &head.ln_hidden)?;
    let out = head.out.forward(&h)?;
    check_finite(stage, &out)?;
    Ok(out)
}

fn sigmoid(x: f32) -> f64 {
    1.0 / (1.0 + libm::exp(-(x as f64)))
}

/// Full forward pass recording intermediate shapes; `probe` receives every
/// attention matrix.
pub fn forward_traced(
    img: &MultimodalImage,
    weights: &VitalWeights,
    probe: &mut dyn FnMut(usize, usize, &Matrix2D),
) -> Result<ForwardTrace> {
    let c = &weights.config;
    ensure!(
        img.size() == c.image_size,
        "image side {} does not match configured {}",
        img.size(),
        c.image_size
    );
    ensure!(img.in_unit_range(), "image values must lie in [0, 1]");
    let mut stems = Vec::with_capacity(3);
    for (m, stem) in Modality::ALL.into_iter().zip(&weights.stems) {
        let out = stem_forward(&img.plane_tensor(m), stem, c)?;
        check_finite(&format!("stem.{}", m.name()), out.data())?;
        stems.push(out);
    }
    let tokens = assemble_tokens([&stems[0], &stems[1], &stems[2]], weights)?;
    check_finite("tokens", tokens.data())?;
    let encoded = encoder_forward_probed(&tokens, weights, probe)?;
    let cls = encoded.row(0);
    let obj = head_forward(cls, &weights.objectness_head, "head.objectness")?;
    let bb = head_forward(cls, &weights.bbox_head, "head.bbox")?;
    ensure!(obj.len() == 1 && bb.len() == 4, "heads must emit 1 and 4 values");
    let s: [f64; 4] = core::array::from_fn(|i| sigmoid(bb[i]));
    let bbox = BBox {
        x_min: s[0].min(s[2]),
        y_min: s[1].min(s[3]),
        x_max: s[0].max(s[2]),
        y_max: s[1].max(s[3]),
    };
    Ok(ForwardTrace {
        stem_shapes: core::array::from_fn(|i| stems[i].shape()),
        token_shape: tokens.shape(),
        encoded_shape: encoded.shape(),
        objectness_logit: obj[0],
        bbox_logits: [bb[0], bb[1], bb[2], bb[3]],
        detection: Detection {
            objectness: sigmoid(obj[0]),
            bbox,
        },
    })
}

/// Marker probability and normalized bounding box for one image.
pub fn detect(img: &MultimodalImage, weights: &VitalWeights) -> Result<Detection> {
    Ok(forward_traced(img, weights, &mut |_, _, _| {})?.detection)
}
