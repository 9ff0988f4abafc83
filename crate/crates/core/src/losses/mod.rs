//! Bounding-box regression losses, focal loss and detection metrics.

mod bbox;
mod focal;
mod metrics;

pub use bbox::{ciou, ciou_loss, ciou_loss_with_alpha, diou, diou_loss, giou, giou_loss, iou, BBox, BoxLoss};
pub use focal::{binary_cross_entropy, focal_loss, FocalLoss};
pub use metrics::{
    acc, acc_box, acc_obj, ap_range, average_precision, classification_counts, summarize, ConfusionCounts,
    EvalSample, MetricsSummary, AP_THRESHOLDS, DEFAULT_ACC_OBJ_ALPHA, DEFAULT_W_ACC,
};
