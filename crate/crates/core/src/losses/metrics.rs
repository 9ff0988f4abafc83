use alloc::vec::Vec;

use super::{iou, BBox};
use crate::vital::Detection;

/// Weight of the positive-class term in [`acc_obj`] when none is given.
pub const DEFAULT_ACC_OBJ_ALPHA: f64 = 0.85;
/// Weight of the box term in [`acc`] when none is given.
pub const DEFAULT_W_ACC: f64 = 0.5;
/// IoU thresholds 0.50, 0.55, …, 0.95.
pub const AP_THRESHOLDS: [f64; 10] = [0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95];

/// One image's prediction against its (optional) ground-truth box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSample {
    pub prediction: Detection,
    pub truth: Option<BBox>,
}

impl EvalSample {
    pub fn truth_present(&self) -> bool {
        self.truth.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    /// `TP / (TP + FN)`, 0 when there are no positives.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Objectness ≥ `threshold` counts as a positive prediction.
pub fn classification_counts(samples: &[EvalSample], threshold: f64) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for s in samples {
        let predicted = s.prediction.objectness >= threshold;
        match (predicted, s.truth_present()) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    c
}

/// `α·TP/(TP+FN) + (1−α)·TN/(TN+FP)`.
///
/// A term whose denominator is zero contributes its full weight when the
/// other class is absent too, and nothing otherwise.
pub fn acc_obj(c: &ConfusionCounts, alpha: f64) -> f64 {
    let pos = c.tp + c.fn_;
    let neg = c.tn + c.fp;
    let term = |num: usize, den: usize, other: usize| {
        if den > 0 {
            num as f64 / den as f64
        } else if other == 0 {
            1.0
        } else {
            0.0
        }
    };
    alpha * term(c.tp, pos, neg) + (1.0 - alpha) * term(c.tn, neg, pos)
}

/// Mean IoU over samples that carry a ground-truth box; 0 when there are none.
pub fn acc_box(samples: &[EvalSample]) -> f64 {
    let ious: Vec<f64> = samples
        .iter()
        .filter_map(|s| s.truth.map(|t| iou(&s.prediction.bbox, &t)))
        .collect();
    if ious.is_empty() {
        0.0
    } else {
        ious.iter().sum::<f64>() / ious.len() as f64
    }
}

pub fn acc(acc_box: f64, acc_obj: f64, w_acc: f64) -> f64 {
    w_acc * acc_box + (1.0 - w_acc) * acc_obj
}

/// Average precision with 101-point interpolation.
///
/// Samples are ranked by objectness (descending, stable). A prediction is a
/// true positive when its image has a ground-truth box overlapping it with
/// IoU ≥ `iou_threshold`; the number of ground-truth boxes fixes recall.
pub fn average_precision(samples: &[EvalSample], iou_threshold: f64) -> f64 {
    let n_truth = samples.iter().filter(|s| s.truth_present()).count();
    if n_truth == 0 {
        return 0.0;
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| {
        samples[b]
            .prediction
            .objectness
            .partial_cmp(&samples[a].prediction.objectness)
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let mut tp = 0usize;
    let mut curve: Vec<(f64, f64)> = Vec::with_capacity(samples.len());
    for (rank, &i) in order.iter().enumerate() {
        let s = &samples[i];
        if s.truth.is_some_and(|t| iou(&s.prediction.bbox, &t) >= iou_threshold) {
            tp += 1;
        }
        curve.push((tp as f64 / n_truth as f64, tp as f64 / (rank + 1) as f64));
    }
    // Precision envelope: best precision at this recall or beyond.
    for i in (0..curve.len().saturating_sub(1)).rev() {
        curve[i].1 = curve[i].1.max(curve[i + 1].1);
    }
    let mut total = 0.0;
    let mut k = 0;
    for step in 0..=100 {
        let level = step as f64 / 100.0;
        while k < curve.len() && curve[k].0 < level {
            k += 1;
        }
        if k < curve.len() {
            total += curve[k].1;
        }
    }
    total / 101.0
}

/// `(AP50, AP50:95)`.
pub fn ap_range(samples: &[EvalSample]) -> (f64, f64) {
    let ap50 = average_precision(samples, 0.5);
    let mean = AP_THRESHOLDS.iter().map(|t| average_precision(samples, *t)).sum::<f64>() / AP_THRESHOLDS.len() as f64;
    (ap50, mean)
}

/// The detection report columns. `tpr` and `recall` are the same quantity;
/// both are reported to match the customary table layout.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsSummary {
    pub tpr: f64,
    pub recall: f64,
    pub f1: f64,
    pub ap50: f64,
    pub ap50_95: f64,
}

pub fn summarize(samples: &[EvalSample], threshold: f64) -> MetricsSummary {
    let c = classification_counts(samples, threshold);
    let (ap50, ap50_95) = ap_range(samples);
    MetricsSummary {
        tpr: c.recall(),
        recall: c.recall(),
        f1: c.f1(),
        ap50,
        ap50_95,
    }
}
