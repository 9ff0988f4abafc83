use core::f64::consts::PI;

use crate::error::{ensure, Result};

/// Axis-aligned box in corner form `(x_min, y_min, x_max, y_max)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BBox {
    /// Checked constructor: corners must be finite and ordered.
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        let b = Self {
            x_min,
            y_min,
            x_max,
            y_max,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.corners().iter().all(|v| v.is_finite()),
            "box has non-finite corners: {self:?}"
        );
        ensure!(
            self.x_min <= self.x_max && self.y_min <= self.y_max,
            "box corners are not ordered: {self:?}"
        );
        Ok(())
    }

    pub fn from_corners(c: [f64; 4]) -> Result<Self> {
        Self::new(c[0], c[1], c[2], c[3])
    }

    pub fn corners(&self) -> [f64; 4] {
        [self.x_min, self.y_min, self.x_max, self.y_max]
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)
    }

    pub fn translate(&self, tx: f64, ty: f64) -> BBox {
        BBox {
            x_min: self.x_min + tx,
            y_min: self.y_min + ty,
            x_max: self.x_max + tx,
            y_max: self.y_max + ty,
        }
    }

    pub fn scale(&self, s: f64) -> BBox {
        BBox {
            x_min: self.x_min * s,
            y_min: self.y_min * s,
            x_max: self.x_max * s,
            y_max: self.y_max * s,
        }
    }
}

/// Intersection over union; 0 when the union is empty.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let iw = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    let ih = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

/// Loss value and its gradient with respect to the predicted corners
/// `(x_min, y_min, x_max, y_max)`. `metric` is the similarity (`1 − loss`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxLoss {
    pub loss: f64,
    pub metric: f64,
    pub grad: [f64; 4],
}

type Grad = [f64; 4];

fn axpy(a: f64, x: &Grad, b: f64, y: &Grad) -> Grad {
    core::array::from_fn(|i| a * x[i] + b * y[i])
}

/// Every quantity the IoU family needs, with derivatives w.r.t. the
/// predicted corners. Sub-gradients at ties pick the truth box's corner.
struct Terms {
    iou: f64,
    d_iou: Grad,
    union: f64,
    d_union: Grad,
    enclose: f64,
    d_enclose: Grad,
    rho2: f64,
    d_rho2: Grad,
    diag2: f64,
    d_diag2: Grad,
    v: f64,
    d_v: Grad,
}

fn terms(p: &BBox, g: &BBox) -> Terms {
    let (w, h) = (p.width(), p.height());

    // Intersection.
    let iw_raw = p.x_max.min(g.x_max) - p.x_min.max(g.x_min);
    let ih_raw = p.y_max.min(g.y_max) - p.y_min.max(g.y_min);
    let (iw, ih) = (iw_raw.max(0.0), ih_raw.max(0.0));
    let (diw_x1, diw_x2) = if iw_raw > 0.0 {
        (if p.x_min > g.x_min { -1.0 } else { 0.0 }, if p.x_max < g.x_max { 1.0 } else { 0.0 })
    } else {
        (0.0, 0.0)
    };
    let (dih_y1, dih_y2) = if ih_raw > 0.0 {
        (if p.y_min > g.y_min { -1.0 } else { 0.0 }, if p.y_max < g.y_max { 1.0 } else { 0.0 })
    } else {
        (0.0, 0.0)
    };
    let inter = iw * ih;
    let d_inter = [ih * diw_x1, iw * dih_y1, ih * diw_x2, iw * dih_y2];

    let d_area = [-h, -w, h, w];
    let union = p.area() + g.area() - inter;
    let d_union: Grad = core::array::from_fn(|i| d_area[i] - d_inter[i]);
    let (iou, d_iou) = if union > 0.0 {
        (
            inter / union,
            core::array::from_fn(|i| (d_inter[i] * union - inter * d_union[i]) / (union * union)),
        )
    } else {
        (0.0, [0.0; 4])
    };

    // Smallest enclosing box.
    let cw = p.x_max.max(g.x_max) - p.x_min.min(g.x_min);
    let ch = p.y_max.max(g.y_max) - p.y_min.min(g.y_min);
    let dcw_x1 = if p.x_min < g.x_min { -1.0 } else { 0.0 };
    let dcw_x2 = if p.x_max > g.x_max { 1.0 } else { 0.0 };
    let dch_y1 = if p.y_min < g.y_min { -1.0 } else { 0.0 };
    let dch_y2 = if p.y_max > g.y_max { 1.0 } else { 0.0 };
    let enclose = cw * ch;
    let d_enclose = [ch * dcw_x1, cw * dch_y1, ch * dcw_x2, cw * dch_y2];
    let diag2 = cw * cw + ch * ch;
    let d_diag2 = [2.0 * cw * dcw_x1, 2.0 * ch * dch_y1, 2.0 * cw * dcw_x2, 2.0 * ch * dch_y2];

    // Squared centre distance.
    let sx = (p.x_min + p.x_max - g.x_min - g.x_max) / 2.0;
    let sy = (p.y_min + p.y_max - g.y_min - g.y_max) / 2.0;
    let rho2 = sx * sx + sy * sy;
    let d_rho2 = [sx, sy, sx, sy];

    // Aspect-ratio consistency.
    let theta_g = libm::atan2(g.width(), g.height());
    let theta = libm::atan2(w, h);
    let diff = theta_g - theta;
    let v = 4.0 / (PI * PI) * diff * diff;
    let norm = w * w + h * h;
    let d_v = if norm > 0.0 {
        let dv_dtheta = -8.0 / (PI * PI) * diff;
        let (dt_dw, dt_dh) = (h / norm, -w / norm);
        [
            -dv_dtheta * dt_dw,
            -dv_dtheta * dt_dh,
            dv_dtheta * dt_dw,
            dv_dtheta * dt_dh,
        ]
    } else {
        [0.0; 4]
    };

    Terms {
        iou,
        d_iou,
        union,
        d_union,
        enclose,
        d_enclose,
        rho2,
        d_rho2,
        diag2,
        d_diag2,
        v,
        d_v,
    }
}

fn check(pred: &BBox, truth: &BBox) -> Result<()> {
    pred.validate()?;
    truth.validate()?;
    ensure!(truth.area() > 0.0, "truth box has zero area: {truth:?}");
    Ok(())
}

fn as_loss(metric: f64, d_metric: Grad) -> BoxLoss {
    BoxLoss {
        loss: 1.0 - metric,
        metric,
        grad: d_metric.map(|d| -d),
    }
}

fn giou_terms(t: &Terms) -> (f64, Grad) {
    // The enclosing box covers the union; rounding may not.
    let value = t.iou - ((t.enclose - t.union) / t.enclose).max(0.0);
    let c2 = t.enclose * t.enclose;
    let grad = core::array::from_fn(|i| t.d_iou[i] + (t.d_union[i] * t.enclose - t.union * t.d_enclose[i]) / c2);
    (value, grad)
}

fn diou_terms(t: &Terms) -> (f64, Grad) {
    let value = t.iou - t.rho2 / t.diag2;
    let d4 = t.diag2 * t.diag2;
    let grad = core::array::from_fn(|i| t.d_iou[i] - (t.d_rho2[i] * t.diag2 - t.rho2 * t.d_diag2[i]) / d4);
    (value, grad)
}

/// The aspect-ratio trade-off weight `v / ((1 − IoU) + v)`, 0 when `v = 0`.
fn ciou_alpha(t: &Terms) -> f64 {
    if t.v > 0.0 {
        t.v / ((1.0 - t.iou) + t.v)
    } else {
        0.0
    }
}

/// `1 − GIoU` with `GIoU = IoU − (C − U)/C` for enclosing area `C`.
pub fn giou_loss(pred: &BBox, truth: &BBox) -> Result<BoxLoss> {
    check(pred, truth)?;
    let (v, g) = giou_terms(&terms(pred, truth));
    Ok(as_loss(v, g))
}

/// `1 − DIoU` with `DIoU = IoU − ρ²/c²` (centre distance over enclosing
/// diagonal).
pub fn diou_loss(pred: &BBox, truth: &BBox) -> Result<BoxLoss> {
    check(pred, truth)?;
    let (v, g) = diou_terms(&terms(pred, truth));
    Ok(as_loss(v, g))
}

/// `1 − CIoU` with `CIoU = DIoU − α·v`. The gradient treats `α` as a
/// constant.
pub fn ciou_loss(pred: &BBox, truth: &BBox) -> Result<BoxLoss> {
    check(pred, truth)?;
    let t = terms(pred, truth);
    let alpha = ciou_alpha(&t);
    Ok(ciou_with(&t, alpha))
}

/// CIoU loss with an externally fixed trade-off weight `alpha`.
pub fn ciou_loss_with_alpha(pred: &BBox, truth: &BBox, alpha: f64) -> Result<BoxLoss> {
    check(pred, truth)?;
    Ok(ciou_with(&terms(pred, truth), alpha))
}

fn ciou_with(t: &Terms, alpha: f64) -> BoxLoss {
    let (d, dd) = diou_terms(t);
    as_loss(d - alpha * t.v, axpy(1.0, &dd, -alpha, &t.d_v))
}

/// Generalized IoU similarity (no preconditions beyond a positive enclosing
/// area; returns 0 otherwise).
pub fn giou(a: &BBox, b: &BBox) -> f64 {
    let t = terms(a, b);
    if t.enclose > 0.0 {
        giou_terms(&t).0
    } else {
        0.0
    }
}

pub fn diou(a: &BBox, b: &BBox) -> f64 {
    let t = terms(a, b);
    if t.diag2 > 0.0 {
        diou_terms(&t).0
    } else {
        t.iou
    }
}

pub fn ciou(a: &BBox, b: &BBox) -> f64 {
    let t = terms(a, b);
    let alpha = ciou_alpha(&t);
    if t.diag2 > 0.0 {
        diou_terms(&t).0 - alpha * t.v
    } else {
        t.iou - alpha * t.v
    }
}
