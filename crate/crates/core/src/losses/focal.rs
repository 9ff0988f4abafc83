use crate::error::{ensure, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocalLoss {
    pub loss: f64,
    /// Derivative with respect to the predicted probability `p`.
    pub grad: f64,
}

/// `FL = −α_t (1 − p_t)^γ ln p_t` where `p_t = p` for a positive target
/// and `1 − p` otherwise, and `α_t` is `alpha` or `1 − alpha` likewise.
pub fn focal_loss(p: f64, positive: bool, alpha: f64, gamma: f64) -> Result<FocalLoss> {
    ensure!(p > 0.0 && p < 1.0, "probability must lie in (0, 1), got {p}");
    ensure!((0.0..=1.0).contains(&alpha), "alpha must lie in [0, 1], got {alpha}");
    ensure!(gamma >= 0.0 && gamma.is_finite(), "gamma must be non-negative, got {gamma}");
    let (pt, at, sign) = if positive { (p, alpha, 1.0) } else { (1.0 - p, 1.0 - alpha, -1.0) };
    let q = 1.0 - pt;
    let log_pt = libm::log(pt);
    let modulator = libm::pow(q, gamma);
    let loss = -at * modulator * log_pt;
    // d/dp_t of the loss; `γ·q^(γ−1)` vanishes for γ = 0.
    let d_mod = if gamma == 0.0 { 0.0 } else { gamma * libm::pow(q, gamma - 1.0) };
    let d_dpt = at * (d_mod * log_pt - modulator / pt);
    Ok(FocalLoss {
        loss,
        grad: sign * d_dpt,
    })
}

/// Binary cross-entropy `−[y ln p + (1 − y) ln(1 − p)]`.
pub fn binary_cross_entropy(p: f64, positive: bool) -> Result<f64> {
    ensure!(p > 0.0 && p < 1.0, "probability must lie in (0, 1), got {p}");
    Ok(if positive { -libm::log(p) } else { -libm::log(1.0 - p) })
}
