use std::io::Write;

use serde::Serialize;

use super::confusion::{f1, ConfusionMatrix};
use crate::error::{Error, Result};
use crate::format::sig6;

/// Confusion matrices at every distinct score, highest score first.
///
/// Entry `k` holds the threshold `s_k` (the k-th largest distinct score) and
/// the counts for "predict positive iff score ≥ s_k". Tied scores form one
/// step.
pub(crate) fn sweep(scores: &[f64], labels: &[bool]) -> Vec<(f64, ConfusionMatrix)> {
    assert_eq!(scores.len(), labels.len(), "scores and labels differ in length");
    let positives = labels.iter().filter(|&&l| l).count() as u64;
    let negatives = labels.len() as u64 - positives;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut steps = Vec::new();
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        steps.push((s, ConfusionMatrix::new(tp, fp, positives - tp, negatives - fp)));
    }
    steps
}

fn require_positive(labels: &[bool]) -> Result<()> {
    if labels.iter().any(|&l| l) {
        Ok(())
    } else {
        Err(Error::DegenerateLabels("no positive labels"))
    }
}

fn require_both_classes(labels: &[bool]) -> Result<()> {
    require_positive(labels)?;
    if labels.iter().all(|&l| l) {
        return Err(Error::DegenerateLabels("no negative labels"));
    }
    Ok(())
}

/// The F1-maximizing threshold of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdChoice {
    pub threshold: f64,
    pub f1: f64,
    pub confusion: ConfusionMatrix,
}

/// Sweeps every distinct score (and one value above the maximum) and returns
/// the threshold with the highest F1. Among equal F1 values the larger
/// threshold wins.
pub fn optimal_threshold(scores: &[f64], labels: &[bool]) -> Result<ThresholdChoice> {
    require_positive(labels)?;
    let steps = sweep(scores, labels);
    let max = steps.first().map_or(0.0, |s| s.0);
    let positives = labels.iter().filter(|&&l| l).count() as u64;
    let mut best = ThresholdChoice {
        threshold: max.next_up(),
        f1: 0.0,
        confusion: ConfusionMatrix::new(0, 0, positives, labels.len() as u64 - positives),
    };
    // Descending thresholds: only a strict improvement moves to a lower one.
    for (threshold, cm) in steps {
        if cm.f1_cmp(&best.confusion).is_gt() {
            best = ThresholdChoice {
                threshold,
                f1: f1(&cm),
                confusion: cm,
            };
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Roc,
    Pr,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub threshold: f64,
    pub x: f64,
    pub y: f64,
}

/// ROC `(FPR, TPR)` or PR `(recall, precision)` points ordered by
/// decreasing threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub kind: CurveKind,
    pub points: Vec<CurvePoint>,
}

impl Curve {
    /// Trapezoidal area under the points.
    pub fn area(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].x - w[0].x) * (w[1].y + w[0].y) / 2.0)
            .sum()
    }

    /// Writes `threshold,x,y` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["threshold", "x", "y"])?;
        for p in &self.points {
            w.write_record([sig6(p.threshold), sig6(p.x), sig6(p.y)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// ROC curve from `(0, 0)` (threshold +∞) through every distinct score down
/// to `(1, 1)`.
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<Curve> {
    require_both_classes(labels)?;
    let mut points = vec![CurvePoint {
        threshold: f64::INFINITY,
        x: 0.0,
        y: 0.0,
    }];
    for (threshold, cm) in sweep(scores, labels) {
        points.push(CurvePoint {
            threshold,
            x: cm.fp as f64 / cm.negatives() as f64,
            y: cm.tp as f64 / cm.positives() as f64,
        });
    }
    Ok(Curve {
        kind: CurveKind::Roc,
        points,
    })
}

pub fn auroc(curve: &Curve) -> f64 {
    curve.area()
}

/// Precision-recall curve over every distinct score.
///
/// The first point is an anchor at recall 0 carrying the precision reached
/// at the highest threshold, so integration covers the whole recall axis.
pub fn pr_curve(scores: &[f64], labels: &[bool]) -> Result<Curve> {
    require_positive(labels)?;
    let steps = sweep(scores, labels);
    let mut points = Vec::with_capacity(steps.len() + 1);
    for (threshold, cm) in steps {
        let precision = cm.tp as f64 / (cm.tp + cm.fp) as f64;
        if points.is_empty() {
            points.push(CurvePoint {
                threshold: f64::INFINITY,
                x: 0.0,
                y: precision,
            });
        }
        points.push(CurvePoint {
            threshold,
            x: cm.tp as f64 / cm.positives() as f64,
            y: precision,
        });
    }
    Ok(Curve {
        kind: CurveKind::Pr,
        points,
    })
}

/// Trapezoidal area under the precision-recall curve.
pub fn aupr(curve: &Curve) -> f64 {
    curve.area()
}

/// Step-wise average precision `Σ (R_k - R_{k-1}) P_k`.
pub fn average_precision(curve: &Curve) -> f64 {
    curve
        .points
        .windows(2)
        .map(|w| (w[1].x - w[0].x) * w[1].y)
        .sum()
}
