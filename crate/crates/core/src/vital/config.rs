use alloc::vec;
use alloc::vec::Vec;

use crate::error::{ensure, Result};

/// Detector hyperparameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct VitalConfig {
    /// Input side length in pixels.
    pub image_size: usize,
    /// Feature maps per stem (`e_d`).
    pub embed_dim: usize,
    /// Side of the stem output grid (`p`).
    pub patch: usize,
    /// Output channels of each stem block; one block halves the resolution.
    pub stem_widths: Vec<usize>,
    pub encoder_layers: usize,
    /// Inner width of the encoder feed-forward blocks.
    pub ffn_hidden: usize,
    pub heads: usize,
    /// Hidden width of the two MLP heads.
    pub head_hidden: usize,
    /// Kept for the schema; inference never applies dropout.
    pub dropout: f32,
    pub bn_eps: f32,
    pub ln_eps: f32,
}

impl Default for VitalConfig {
    fn default() -> Self {
        Self {
            image_size: 160,
            embed_dim: 128,
            patch: 20,
            stem_widths: vec![16, 32, 64],
            encoder_layers: 6,
            ffn_hidden: 512,
            heads: 6,
            head_hidden: 384,
            dropout: 0.2,
            bn_eps: 1e-5,
            ln_eps: 1e-6,
        }
    }
}

impl VitalConfig {
    /// Width of every token: three concatenated stems.
    pub fn token_dim(&self) -> usize {
        3 * self.embed_dim
    }

    /// Tokens per image including the class token.
    pub fn num_tokens(&self) -> usize {
        self.patch * self.patch + 1
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.embed_dim > 0 && self.image_size > 0, "dimensions must be positive");
        ensure!(!self.stem_widths.is_empty(), "a stem needs at least one block");
        ensure!(self.stem_widths.iter().all(|w| *w > 0), "stem widths must be positive");
        let shrink = 1usize << self.stem_widths.len();
        ensure!(
            self.image_size % shrink == 0 && self.image_size / shrink == self.patch,
            "patch side {} must equal image size {} / 2^{}",
            self.patch,
            self.image_size,
            self.stem_widths.len()
        );
        ensure!(
            self.heads > 0 && self.token_dim() % self.heads == 0,
            "{} heads do not divide token width {}",
            self.heads,
            self.token_dim()
        );
        ensure!(self.encoder_layers > 0, "encoder needs at least one layer");
        ensure!(self.ffn_hidden > 0 && self.head_hidden > 0, "hidden widths must be positive");
        ensure!((0.0..1.0).contains(&self.dropout), "dropout must lie in [0, 1)");
        ensure!(self.bn_eps >= 0.0 && self.ln_eps >= 0.0, "epsilons must be non-negative");
        Ok(())
    }
}
