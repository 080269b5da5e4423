//! Threshold tuning, confusion matrices, ROC / precision-recall curves and
//! their areas.

mod confusion;
mod curve;
mod report;

pub use confusion::{confusion_at, f1, precision, recall, ConfusionMatrix};
pub use curve::{
    aupr, auroc, average_precision, optimal_threshold, pr_curve, roc_curve, Curve, CurveKind, CurvePoint,
    ThresholdChoice,
};
pub use report::{evaluate, evaluate_scores, EvaluationReport};
