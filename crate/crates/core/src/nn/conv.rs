use alloc::vec;
use alloc::vec::Vec;

use super::gemm::{self, Bias};
use super::Tensor3;
use crate::error::{ensure, Result};

/// Square convolution kernels laid out `[out][in][ky][kx]`, plus one bias per
/// output channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvWeights {
    pub out_channels: usize,
    pub in_channels: usize,
    pub kernel: usize,
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
}

impl ConvWeights {
    pub fn zeros(in_channels: usize, out_channels: usize, kernel: usize) -> Self {
        Self {
            out_channels,
            in_channels,
            kernel,
            weights: vec![0.0; out_channels * in_channels * kernel * kernel],
            bias: vec![0.0; out_channels],
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.kernel > 0, "convolution kernel size must be positive");
        ensure!(
            self.weights.len() == self.out_channels * self.in_channels * self.kernel * self.kernel,
            "convolution weight block has {} values, expected {}x{}x{}x{}",
            self.weights.len(),
            self.out_channels,
            self.in_channels,
            self.kernel,
            self.kernel
        );
        ensure!(
            self.bias.len() == self.out_channels,
            "convolution bias has {} values for {} output channels",
            self.bias.len(),
            self.out_channels
        );
        Ok(())
    }

    #[inline]
    pub fn at(&self, o: usize, i: usize, ky: usize, kx: usize) -> f32 {
        self.weights[((o * self.in_channels + i) * self.kernel + ky) * self.kernel + kx]
    }
}

/// Cross-correlation with zero padding. Output side is `⌊(H+2p−k)/s⌋+1`.
pub fn conv2d_forward(input: &Tensor3, kernels: &ConvWeights, stride: usize, padding: usize) -> Result<Tensor3> {
    kernels.validate()?;
    ensure!(stride > 0, "convolution stride must be positive");
    ensure!(
        input.channels() == kernels.in_channels,
        "convolution expects {} input channels, got {}",
        kernels.in_channels,
        input.channels()
    );
    let (c, h, w) = input.shape();
    let k = kernels.kernel;
    ensure!(
        k <= h + 2 * padding && k <= w + 2 * padding,
        "kernel {k} exceeds padded input {}x{}",
        h + 2 * padding,
        w + 2 * padding
    );
    let oh = (h + 2 * padding - k) / stride + 1;
    let ow = (w + 2 * padding - k) / stride + 1;
    let mut out = Tensor3::zeros(kernels.out_channels, oh, ow);

    // Pointwise convolution reads the input directly as the column matrix.
    let direct = k == 1 && stride == 1 && padding == 0;
    let cols: Vec<f32>;
    let col_ref: &[f32] = if direct {
        input.data()
    } else {
        cols = im2col(input, k, stride, padding, oh, ow);
        &cols
    };
    gemm::gemm(
        &kernels.weights,
        col_ref,
        kernels.out_channels,
        c * k * k,
        oh * ow,
        Bias::PerRow(&kernels.bias),
        out.data_mut(),
    );
    Ok(out)
}

/// Unfolds patches into a `(C·k·k) × (oh·ow)` matrix matching the kernel
/// layout, so the convolution becomes one matrix product.
fn im2col(input: &Tensor3, k: usize, stride: usize, padding: usize, oh: usize, ow: usize) -> Vec<f32> {
    let (c, h, w) = input.shape();
    let n = oh * ow;
    let mut cols = vec![0.0f32; c * k * k * n];
    for ch in 0..c {
        let plane = input.plane(ch);
        for ky in 0..k {
            for kx in 0..k {
                let row = (ch * k + ky) * k + kx;
                let dst = &mut cols[row * n..(row + 1) * n];
                for oy in 0..oh {
                    let iy = (oy * stride + ky) as isize - padding as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let src = &plane[iy as usize * w..(iy as usize + 1) * w];
                    let drow = &mut dst[oy * ow..(oy + 1) * ow];
                    for (ox, d) in drow.iter_mut().enumerate() {
                        let ix = (ox * stride + kx) as isize - padding as isize;
                        if ix >= 0 && ix < w as isize {
                            *d = src[ix as usize];
                        }
                    }
                }
            }
        }
    }
    cols
}

/// 2×2 max pooling with stride 2.
pub fn maxpool2_forward(input: &Tensor3) -> Result<Tensor3> {
    let (c, h, w) = input.shape();
    ensure!(h % 2 == 0 && w % 2 == 0, "max pooling needs even dimensions, got {h}x{w}");
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Tensor3::zeros(c, oh, ow);
    for ch in 0..c {
        let src = input.plane(ch);
        let dst = out.plane_mut(ch);
        for oy in 0..oh {
            let r0 = &src[2 * oy * w..(2 * oy + 1) * w];
            let r1 = &src[(2 * oy + 1) * w..(2 * oy + 2) * w];
            for ox in 0..ow {
                dst[oy * ow + ox] = r0[2 * ox].max(r0[2 * ox + 1]).max(r1[2 * ox]).max(r1[2 * ox + 1]);
            }
        }
    }
    Ok(out)
}
