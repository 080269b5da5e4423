use serde::{Serialize, Serializer};

use super::confusion::{confusion_at, f1, precision, recall, ConfusionMatrix};
use super::curve::{aupr, auroc, average_precision, pr_curve, roc_curve, Curve};
use crate::error::Result;
use crate::format::round_sig6;
use crate::katz::ScoreTable;

fn sig6<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round_sig6(*x))
}

/// All metrics for one model at one threshold.
#[derive(Debug, Clone, Serialize)]
pub struct EvaluationReport {
    pub model: String,
    #[serde(serialize_with = "sig6")]
    pub threshold: f64,
    pub confusion: ConfusionMatrix,
    #[serde(serialize_with = "sig6")]
    pub precision: f64,
    #[serde(serialize_with = "sig6")]
    pub recall: f64,
    #[serde(serialize_with = "sig6")]
    pub f1: f64,
    #[serde(serialize_with = "sig6")]
    pub aupr: f64,
    #[serde(serialize_with = "sig6")]
    pub auroc: f64,
    #[serde(serialize_with = "sig6")]
    pub average_precision: f64,
    #[serde(skip)]
    pub roc: Curve,
    #[serde(skip)]
    pub pr: Curve,
}

impl EvaluationReport {
    /// Precision, recall and F1 recomputed from the stored confusion matrix.
    pub fn recomputed(&self) -> (f64, f64, f64) {
        (
            precision(&self.confusion),
            recall(&self.confusion),
            f1(&self.confusion),
        )
    }
}

/// Evaluates raw scores against labels at a fixed threshold.
pub fn evaluate_scores(model: &str, scores: &[f64], labels: &[bool], threshold: f64) -> Result<EvaluationReport> {
    let roc = roc_curve(scores, labels)?;
    let pr = pr_curve(scores, labels)?;
    let cm = confusion_at(scores, labels, threshold);
    Ok(EvaluationReport {
        model: model.to_owned(),
        threshold,
        confusion: cm,
        precision: precision(&cm),
        recall: recall(&cm),
        f1: f1(&cm),
        aupr: aupr(&pr),
        auroc: auroc(&roc),
        average_precision: average_precision(&pr),
        roc,
        pr,
    })
}

/// Evaluates a score table against its universe labels.
pub fn evaluate(table: &ScoreTable, threshold: f64) -> Result<EvaluationReport> {
    evaluate_scores(table.model(), table.scores(), table.labels(), threshold)
}
