//! Threshold classification, confusion matrices, and classification
//! reports (per-class precision/recall/F1/support, accuracy, macro and
//! weighted averages). Values are kept at full precision; rounding to two
//! decimals happens only when the plain-text table is rendered.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roc::Direction;
use crate::scoring::Label;

/// Applies a threshold. The boundary is inclusive: a score equal to
/// `t_star` classifies as AI.
pub fn classify(score: f64, t_star: f64, direction: Direction) -> Label {
    let is_ai = match direction {
        Direction::AiLow => score <= t_star,
        Direction::AiHigh => score >= t_star,
    };
    if is_ai {
        Label::Ai
    } else {
        Label::Human
    }
}

/// Binary confusion matrix with AI as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub true_positives: usize,
    pub false_negatives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
}

impl ConfusionMatrix {
    pub fn new(tp: usize, fn_: usize, fp: usize, tn: usize) -> Self {
        Self {
            true_positives: tp,
            false_negatives: fn_,
            false_positives: fp,
            true_negatives: tn,
        }
    }

    /// Counts predictions against ground truth. Both slices must be equal
    /// length and strictly binary.
    pub fn from_labels(predictions: &[Label], truth: &[Label]) -> Result<Self> {
        if predictions.len() != truth.len() {
            return Err(Error::LengthMismatch {
                predictions: predictions.len(),
                truth: truth.len(),
            });
        }
        let mut cm = ConfusionMatrix::new(0, 0, 0, 0);
        for (&pred, &actual) in predictions.iter().zip(truth) {
            match (actual, pred) {
                (Label::Ai, Label::Ai) => cm.true_positives += 1,
                (Label::Ai, Label::Human) => cm.false_negatives += 1,
                (Label::Human, Label::Ai) => cm.false_positives += 1,
                (Label::Human, Label::Human) => cm.true_negatives += 1,
                _ => {
                    return Err(Error::InvalidConfig(
                        "confusion matrix labels must be binary".into(),
                    ))
                }
            }
        }
        Ok(cm)
    }

    pub fn support_ai(&self) -> usize {
        self.true_positives + self.false_negatives
    }

    pub fn support_human(&self) -> usize {
        self.false_positives + self.true_negatives
    }

    pub fn total(&self) -> usize {
        self.support_ai() + self.support_human()
    }

    /// TPR = TP / (TP + FN); 0 when there are no positives.
    pub fn tpr(&self) -> f64 {
        ratio(self.true_positives, self.support_ai())
    }

    /// FPR = FP / (FP + TN); 0 when there are no negatives.
    pub fn fpr(&self) -> f64 {
        ratio(self.false_positives, self.support_human())
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.true_positives + self.true_negatives, self.total())
    }
}

fn ratio(num: usize, denom: usize) -> f64 {
    if denom == 0 {
        0.0
    } else {
        num as f64 / denom as f64
    }
}

/// Precision/recall/F1/support for one class. `degenerate` marks a
/// zero-denominator precision or recall that was reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
}

fn class_metrics(tp: usize, fp: usize, fn_: usize, support: usize) -> ClassMetrics {
    let p_denom = tp + fp;
    let r_denom = tp + fn_;
    let precision = ratio(tp, p_denom);
    let recall = ratio(tp, r_denom);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    ClassMetrics {
        precision,
        recall,
        f1,
        support,
        degenerate: p_denom == 0 || r_denom == 0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AverageRow {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// The full report in the shape of a two-class sklearn-style table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub human: ClassMetrics,
    pub ai: ClassMetrics,
    pub accuracy: f64,
    pub macro_avg: AverageRow,
    pub weighted_avg: AverageRow,
    pub confusion: ConfusionMatrix,
}

/// Builds the report from a confusion matrix. Total must be positive.
pub fn classification_report(cm: &ConfusionMatrix) -> Result<ClassificationReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyCorpus);
    }
    // For the human class the matrix roles swap: TN are its true
    // positives, FN its false positives.
    let human = class_metrics(
        cm.true_negatives,
        cm.false_negatives,
        cm.false_positives,
        cm.support_human(),
    );
    let ai = class_metrics(
        cm.true_positives,
        cm.false_positives,
        cm.false_negatives,
        cm.support_ai(),
    );
    let macro_avg = AverageRow {
        precision: (human.precision + ai.precision) / 2.0,
        recall: (human.recall + ai.recall) / 2.0,
        f1: (human.f1 + ai.f1) / 2.0,
        support: total,
    };
    let wh = cm.support_human() as f64 / total as f64;
    let wa = cm.support_ai() as f64 / total as f64;
    let weighted_avg = AverageRow {
        precision: human.precision * wh + ai.precision * wa,
        recall: human.recall * wh + ai.recall * wa,
        f1: human.f1 * wh + ai.f1 * wa,
        support: total,
    };
    Ok(ClassificationReport {
        human,
        ai,
        accuracy: cm.accuracy(),
        macro_avg,
        weighted_avg,
        confusion: *cm,
    })
}

impl ClassificationReport {
    /// Plain-text table with two-decimal rounding:
    /// Human, AI, accuracy, macro avg, weighted avg rows.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let header = format!(
            "{:>12}  {:>9}  {:>8}  {:>8}  {:>8}\n",
            "", "precision", "recall", "f1-score", "support"
        );
        out.push_str(&header);
        out.push('\n');
        let class_row = |name: &str, m: &ClassMetrics| {
            format!(
                "{:>12}  {:>9.2}  {:>8.2}  {:>8.2}  {:>8}\n",
                name, m.precision, m.recall, m.f1, m.support
            )
        };
        out.push_str(&class_row("Human", &self.human));
        out.push_str(&class_row("AI", &self.ai));
        out.push('\n');
        out.push_str(&format!(
            "{:>12}  {:>9}  {:>8}  {:>8.2}  {:>8}\n",
            "accuracy",
            "",
            "",
            self.accuracy,
            self.confusion.total()
        ));
        let avg_row = |name: &str, r: &AverageRow| {
            format!(
                "{:>12}  {:>9.2}  {:>8.2}  {:>8.2}  {:>8}\n",
                name, r.precision, r.recall, r.f1, r.support
            )
        };
        out.push_str(&avg_row("macro avg", &self.macro_avg));
        out.push_str(&avg_row("weighted avg", &self.weighted_avg));
        if self.human.degenerate || self.ai.degenerate {
            out.push_str("\nnote: a class had zero denominator; its metrics are reported as 0\n");
        }
        out
    }
}
