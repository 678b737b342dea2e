//! Confusion-matrix metrics, the F1² composite and the evaluation harness.
//!
//! The positive class is `NonSurvived`. Every ratio with a zero denominator
//! is reported as 0.

mod eval;

pub use eval::{
    evaluate, kfold_evaluate, stratified_folds, EvalOutcome, Evaluation, FoldAudit, Protocol,
};

use serde::{Deserialize, Serialize};

use crate::datamodel::ClassLabel;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn from_predictions(truth: &[ClassLabel], predicted: &[ClassLabel]) -> Self {
        assert_eq!(truth.len(), predicted.len(), "prediction length mismatch");
        let mut c = ConfusionCounts::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            c.record(t, p);
        }
        c
    }

    pub fn record(&mut self, truth: ClassLabel, predicted: ClassLabel) {
        match (truth, predicted) {
            (ClassLabel::NonSurvived, ClassLabel::NonSurvived) => self.tp += 1,
            (ClassLabel::Survived, ClassLabel::NonSurvived) => self.fp += 1,
            (ClassLabel::Survived, ClassLabel::Survived) => self.tn += 1,
            (ClassLabel::NonSurvived, ClassLabel::Survived) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn merge(&mut self, other: &ConfusionCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision_surv: f64,
    pub recall_surv: f64,
    pub f1_surv: f64,
    pub precision_nonsurv: f64,
    pub recall_nonsurv: f64,
    pub f1_nonsurv: f64,
    pub accuracy: f64,
    /// Balanced accuracy: mean of the two class recalls.
    pub a_th: f64,
    pub f1_squared: f64,
    pub counts: ConfusionCounts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<Protocol>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Product of the two per-class F1 scores.
pub fn f1_squared(f1_nonsurv: f64, f1_surv: f64) -> f64 {
    f1_nonsurv * f1_surv
}

/// Mean of the two class recalls, computed from one integer ratio so that
/// rules with equal scores get bit-identical values.
pub fn balanced_accuracy(c: &ConfusionCounts) -> f64 {
    let (neg, pos) = (c.tn + c.fp, c.tp + c.fn_);
    if neg == 0 || pos == 0 {
        return 0.5 * (ratio(c.tn, neg) + ratio(c.tp, pos));
    }
    let num = c.tn as u128 * pos as u128 + c.tp as u128 * neg as u128;
    num as f64 / (2 * neg as u128 * pos as u128) as f64
}

pub fn compute_metrics(c: &ConfusionCounts) -> EvalReport {
    let precision_surv = ratio(c.tn, c.tn + c.fn_);
    let recall_surv = ratio(c.tn, c.tn + c.fp);
    let precision_nonsurv = ratio(c.tp, c.tp + c.fp);
    let recall_nonsurv = ratio(c.tp, c.tp + c.fn_);
    let f1_surv = f1_score(precision_surv, recall_surv);
    let f1_nonsurv = f1_score(precision_nonsurv, recall_nonsurv);
    EvalReport {
        precision_surv,
        recall_surv,
        f1_surv,
        precision_nonsurv,
        recall_nonsurv,
        f1_nonsurv,
        accuracy: ratio(c.tp + c.tn, c.total()),
        a_th: balanced_accuracy(c),
        f1_squared: f1_squared(f1_nonsurv, f1_surv),
        counts: *c,
        protocol: None,
    }
}
