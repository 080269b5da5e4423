use serde::{Deserialize, Serialize};

/// Binary confusion counts over a candidate universe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        ConfusionMatrix { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> u64 {
        self.fp + self.tn
    }

    pub fn precision(&self) -> f64 {
        precision(self)
    }

    pub fn recall(&self) -> f64 {
        recall(self)
    }

    pub fn f1(&self) -> f64 {
        f1(self)
    }

    /// Compares F1 exactly: `2tp / (2tp + fp + fn)` cross-multiplied.
    pub fn f1_cmp(&self, other: &ConfusionMatrix) -> std::cmp::Ordering {
        let num = |c: &ConfusionMatrix| 2 * c.tp as u128;
        let den = |c: &ConfusionMatrix| (2 * c.tp + c.fp + c.fn_) as u128;
        match (den(self), den(other)) {
            (0, 0) => std::cmp::Ordering::Equal,
            (0, _) => 0u128.cmp(&num(other)),
            (_, 0) => num(self).cmp(&0),
            (a, b) => (num(self) * b).cmp(&(num(other) * a)),
        }
    }
}

/// `tp / (tp + fp)`, zero when nothing is predicted positive.
pub fn precision(cm: &ConfusionMatrix) -> f64 {
    match cm.tp + cm.fp {
        0 => 0.0,
        d => cm.tp as f64 / d as f64,
    }
}

/// `tp / (tp + fn)`, zero when there are no positives.
pub fn recall(cm: &ConfusionMatrix) -> f64 {
    match cm.tp + cm.fn_ {
        0 => 0.0,
        d => cm.tp as f64 / d as f64,
    }
}

/// Harmonic mean of precision and recall, zero when both are zero.
pub fn f1(cm: &ConfusionMatrix) -> f64 {
    let (p, r) = (precision(cm), recall(cm));
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * (p * r) / (p + r)
    }
}

/// Counts with the rule "predict positive iff score ≥ threshold".
pub fn confusion_at(scores: &[f64], labels: &[bool], threshold: f64) -> ConfusionMatrix {
    assert_eq!(scores.len(), labels.len(), "scores and labels differ in length");
    let mut cm = ConfusionMatrix::default();
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, true) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
        }
    }
    cm
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round3(x: f64) -> f64 {
        (x * 1000.0).round() / 1000.0
    }

    #[test]
    fn published_confusion_matrices() {
        let ki = ConfusionMatrix::new(141, 1164, 536, 243_679);
        assert_eq!((round3(ki.precision()), round3(ki.recall()), round3(ki.f1())), (0.108, 0.208, 0.142));
        let ewki = ConfusionMatrix::new(482, 6, 195, 244_837);
        assert_eq!((round3(ewki.precision()), round3(ewki.recall()), round3(ewki.f1())), (0.988, 0.712, 0.827));
        let wkiewki = ConfusionMatrix::new(676, 1386, 1, 243_457);
        assert_eq!(
            (round3(wkiewki.precision()), round3(wkiewki.recall()), round3(wkiewki.f1())),
            (0.328, 0.999, 0.494)
        );
    }

    #[test]
    fn zero_division_conventions() {
        let none_predicted = ConfusionMatrix::new(0, 0, 5, 10);
        assert_eq!(none_predicted.precision(), 0.0);
        assert_eq!(none_predicted.f1(), 0.0);
        let no_positives = ConfusionMatrix::new(0, 3, 0, 10);
        assert_eq!(no_positives.recall(), 0.0);
        assert_eq!(ConfusionMatrix::default().f1(), 0.0);
    }

    #[test]
    fn thresholding_edges() {
        let scores = [0.0, 0.2, 0.5, 0.5, 0.9, 1.0];
        let labels = [false, true, false, true, false, true];
        let all = confusion_at(&scores, &labels, 0.0);
        assert_eq!(all, ConfusionMatrix::new(3, 3, 0, 0));
        let none = confusion_at(&scores, &labels, 1.5);
        assert_eq!((none.tp, none.fp), (0, 0));
        // Hand count at 0.5: predicted {0.5, 0.5, 0.9, 1.0}.
        assert_eq!(confusion_at(&scores, &labels, 0.5), ConfusionMatrix::new(2, 2, 1, 1));
    }

    #[test]
    fn exact_f1_comparison() {
        let a = ConfusionMatrix::new(1, 1, 1, 0); // 2/4
        let b = ConfusionMatrix::new(2, 2, 2, 0); // 4/8
        assert_eq!(a.f1_cmp(&b), std::cmp::Ordering::Equal);
        let c = ConfusionMatrix::new(2, 1, 2, 0);
        assert_eq!(c.f1_cmp(&a), std::cmp::Ordering::Greater);
    }
}
