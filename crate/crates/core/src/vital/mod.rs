//! Multimodal vision-transformer detector, forward inference only.
//!
//! Each sensor plane (visual, thermal, LiDAR) passes through its own
//! convolutional stem that shrinks the image by 2³ into `e_d` feature maps.
//! The three stems are concatenated channel-wise and flattened into `p²`
//! tokens of width `3·e_d`, a class token is prepended and a positional
//! embedding added. A pre-norm transformer encoder processes the tokens and
//! two MLP heads read the class token: one for the objectness probability,
//! one for the normalized bounding box.

mod config;
mod image;
mod model;
mod weights;

pub use config::VitalConfig;
pub use image::{Modality, MultimodalImage};
pub use model::{
    assemble_tokens, detect, encoder_forward, encoder_forward_probed, forward_traced, stem_forward, ForwardTrace,
};
pub use weights::{init_weights, EncoderLayer, Head, StemBlock, StemWeights, VitalWeights};

use crate::losses::BBox;

/// Detector output: marker probability and box in normalized `[0, 1]`
/// image coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Detection {
    pub objectness: f64,
    pub bbox: BBox,
}
