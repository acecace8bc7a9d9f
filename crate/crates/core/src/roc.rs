//! ROC curves, AUROC, and global threshold selection.
//!
//! Candidate thresholds sit at midpoints between consecutive distinct
//! scores, plus sentinels below the minimum and above the maximum, so no
//! boundary ever coincides with a data point. Three selection rules pick
//! the operating threshold: Youden's J (max TPR - FPR), the Closest-Point
//! rule (min distance to the (0,1) corner), and maximum TPR subject to an
//! FPR ceiling. Argmax ties break toward the lowest FPR, then toward the
//! threshold that predicts fewer documents as AI.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::{Label, ScoredDocument};

/// Which side of the threshold is classified as AI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// AI is predicted when score <= t (Binoculars: human text scores higher).
    AiLow,
    /// AI is predicted when score >= t.
    AiHigh,
}

impl Direction {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ai-low" | "ai_low" | "low" | "<=" => Ok(Direction::AiLow),
            "ai-high" | "ai_high" | "high" | ">=" => Ok(Direction::AiHigh),
            other => Err(Error::InvalidConfig(format!("not a direction: {other:?}"))),
        }
    }

    /// Conventional orientation for the built-in score fields.
    pub fn default_for_field(field: &str) -> Self {
        match field {
            "likelihood" => Direction::AiHigh,
            _ => Direction::AiLow,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::AiLow => write!(f, "ai-low"),
            Direction::AiHigh => write!(f, "ai-high"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC curve in sweep order: from the all-negative sentinel at (0,0) to
/// the all-positive sentinel at (1,1), FPR and TPR nondecreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub direction: Direction,
    pub positive_count: usize,
    pub negative_count: usize,
}

/// A score with its ground-truth class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledScore {
    pub score: f64,
    pub label: Label,
}

/// Builds the ROC curve for one score field over scored documents.
pub fn roc_from_documents(
    docs: &[ScoredDocument],
    score_field: &str,
    direction: Direction,
) -> Result<RocCurve> {
    let samples = docs
        .iter()
        .filter(|d| d.label != Label::Unknown)
        .map(|d| {
            d.score(score_field)
                .map(|score| LabeledScore {
                    score,
                    label: d.label,
                })
                .ok_or_else(|| Error::MissingScore {
                    doc_id: d.doc_id.clone(),
                    field: score_field.to_string(),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    build_roc(&samples, direction)
}

/// Builds the ROC curve from labeled scores. Both classes must be present;
/// `Unknown` labels are ignored.
pub fn build_roc(samples: &[LabeledScore], direction: Direction) -> Result<RocCurve> {
    let mut labeled: Vec<(f64, Label)> = Vec::with_capacity(samples.len());
    let mut positive_count = 0usize;
    let mut negative_count = 0usize;
    for s in samples {
        match s.label {
            Label::Ai => positive_count += 1,
            Label::Human => negative_count += 1,
            Label::Unknown => continue,
        }
        if !s.score.is_finite() {
            return Err(Error::Parse {
                line: None,
                msg: format!("non-finite score {}", s.score),
            });
        }
        labeled.push((s.score, s.label));
    }
    if positive_count == 0 || negative_count == 0 {
        return Err(Error::SingleClassInput);
    }

    // Sort in sweep order: each step moves one score group to the AI side.
    match direction {
        Direction::AiLow => labeled.sort_by(|a, b| a.0.total_cmp(&b.0)),
        Direction::AiHigh => labeled.sort_by(|a, b| b.0.total_cmp(&a.0)),
    }

    let p = positive_count as f64;
    let n = negative_count as f64;
    let mut points = Vec::new();

    // All-negative sentinel.
    let first = labeled[0].0;
    let sentinel_low = match direction {
        Direction::AiLow => first - 1.0,
        Direction::AiHigh => first + 1.0,
    };
    points.push(RocPoint {
        threshold: sentinel_low,
        fpr: 0.0,
        tpr: 0.0,
    });

    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < labeled.len() {
        let score = labeled[i].0;
        let mut j = i;
        while j < labeled.len() && labeled[j].0 == score {
            match labeled[j].1 {
                Label::Ai => tp += 1,
                Label::Human => fp += 1,
                Label::Unknown => unreachable!(),
            }
            j += 1;
        }
        let threshold = if j < labeled.len() {
            // Midpoint between this score group and the next distinct score.
            (score + labeled[j].0) / 2.0
        } else {
            // All-positive sentinel.
            match direction {
                Direction::AiLow => score + 1.0,
                Direction::AiHigh => score - 1.0,
            }
        };
        points.push(RocPoint {
            threshold,
            fpr: fp as f64 / n,
            tpr: tp as f64 / p,
        });
        i = j;
    }

    Ok(RocCurve {
        points,
        direction,
        positive_count,
        negative_count,
    })
}

/// Trapezoidal area under the curve.
pub fn auroc(curve: &RocCurve) -> f64 {
    curve
        .points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Youden,
    Closest,
    TprAtFpr,
}

impl Method {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "youden" => Ok(Method::Youden),
            "closest" | "closest-point" | "closest_point" => Ok(Method::Closest),
            "tpr_at_fpr" | "tpr-at-fpr" | "tpr@fpr" => Ok(Method::TprAtFpr),
            other => Err(Error::InvalidConfig(format!(
                "not a threshold method: {other:?}"
            ))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Youden => write!(f, "youden"),
            Method::Closest => write!(f, "closest"),
            Method::TprAtFpr => write!(f, "tpr_at_fpr"),
        }
    }
}

/// A selected global threshold with the objective value that chose it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdChoice {
    pub method: Method,
    pub t_star: f64,
    /// J(t*), d(t*), or TPR(t*) depending on the method.
    pub objective: f64,
    /// FPR bound; present for tpr_at_fpr only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Set when the bound forced the all-negative operating point.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub warning: bool,
    /// Operating point at t*.
    pub fpr: f64,
    pub tpr: f64,
}

/// Maximizes Youden's J(t) = TPR(t) - FPR(t).
pub fn youden_threshold(curve: &RocCurve) -> ThresholdChoice {
    let mut best = &curve.points[0];
    let mut best_j = best.tpr - best.fpr;
    for point in &curve.points[1..] {
        let j = point.tpr - point.fpr;
        if j > best_j || (j == best_j && point.fpr < best.fpr) {
            best = point;
            best_j = j;
        }
        // Equal J and FPR keeps the earlier (more conservative) point.
    }
    ThresholdChoice {
        method: Method::Youden,
        t_star: best.threshold,
        objective: best_j,
        epsilon: None,
        warning: false,
        fpr: best.fpr,
        tpr: best.tpr,
    }
}

/// Minimizes the Euclidean distance to the top-left corner (0, 1).
pub fn closest_point_threshold(curve: &RocCurve) -> ThresholdChoice {
    let dist = |p: &RocPoint| (p.fpr.powi(2) + (1.0 - p.tpr).powi(2)).sqrt();
    let mut best = &curve.points[0];
    let mut best_d = dist(best);
    for point in &curve.points[1..] {
        let d = dist(point);
        if d < best_d || (d == best_d && point.fpr < best.fpr) {
            best = point;
            best_d = d;
        }
    }
    ThresholdChoice {
        method: Method::Closest,
        t_star: best.threshold,
        objective: best_d,
        epsilon: None,
        warning: false,
        fpr: best.fpr,
        tpr: best.tpr,
    }
}

/// Maximizes TPR subject to FPR(t) <= epsilon. The all-negative sentinel
/// always satisfies the bound; choosing it sets the warning flag.
pub fn tpr_at_fpr_threshold(curve: &RocCurve, epsilon: f64) -> Result<ThresholdChoice> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidConfig(format!(
            "epsilon must be in [0, 1], got {epsilon}"
        )));
    }
    let mut best: Option<&RocPoint> = None;
    for point in &curve.points {
        if point.fpr > epsilon {
            continue;
        }
        match best {
            None => best = Some(point),
            Some(b) => {
                if point.tpr > b.tpr || (point.tpr == b.tpr && point.fpr < b.fpr) {
                    best = Some(point);
                }
            }
        }
    }
    let best = best.expect("the all-negative sentinel always satisfies the bound");
    Ok(ThresholdChoice {
        method: Method::TprAtFpr,
        t_star: best.threshold,
        objective: best.tpr,
        epsilon: Some(epsilon),
        warning: best.tpr == 0.0,
        fpr: best.fpr,
        tpr: best.tpr,
    })
}
