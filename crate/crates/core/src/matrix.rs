//! Per-position next-token log-probability matrices.
//!
//! A `LogProbMatrix` holds one row per token position; row `i` is the
//! model's distribution over the whole vocabulary for the token at
//! position `i` given positions `< i`. Entries are natural-log
//! probabilities. Every row exponentiates and sums to 1 within 1e-6,
//! and all entries are finite and non-positive; both constructors apply
//! a probability floor so that no entry is exactly zero in probability
//! space.

use crate::error::{Error, Result};

/// Probabilities below this floor are clamped before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

/// Row-sum tolerance (probability space) for validation.
pub const ROW_SUM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct LogProbMatrix {
    data: Vec<f64>, // row-major, rows * vocab_size
    rows: usize,
    vocab_size: usize,
}

impl LogProbMatrix {
    /// Builds a matrix from probability rows. Each row must sum to 1
    /// within [`ROW_SUM_TOL`]; entries below [`PROB_FLOOR`] are clamped
    /// and the row is renormalized before logs are taken.
    pub fn from_probability_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::ShapeError("matrix has no rows".into()));
        }
        let vocab_size = rows[0].len();
        if vocab_size == 0 {
            return Err(Error::ShapeError("matrix rows are empty".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * vocab_size);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != vocab_size {
                return Err(Error::ShapeError(format!(
                    "row {} has {} entries, expected {}",
                    i + 1,
                    row.len(),
                    vocab_size
                )));
            }
            let mut sum = 0.0;
            for &p in row {
                if !p.is_finite() || p < 0.0 {
                    return Err(Error::ShapeError(format!(
                        "row {} contains a non-probability entry {p}",
                        i + 1
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::Parse {
                    line: Some(i + 1),
                    msg: format!("row sums to {sum:.6}, expected 1 within {ROW_SUM_TOL}"),
                });
            }
            let floored: Vec<f64> = row.iter().map(|&p| p.max(PROB_FLOOR)).collect();
            let norm: f64 = floored.iter().sum();
            data.extend(floored.iter().map(|&p| (p / norm).ln()));
        }
        Ok(Self {
            data,
            rows: rows.len(),
            vocab_size,
        })
    }

    /// Builds a matrix from unnormalized log scores (logits). Rows are
    /// normalized with log-sum-exp, so adding a constant to every score
    /// of a row leaves the result unchanged.
    pub fn from_logits(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::ShapeError("matrix has no rows".into()));
        }
        let vocab_size = rows[0].len();
        if vocab_size == 0 {
            return Err(Error::ShapeError("matrix rows are empty".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * vocab_size);
        let log_floor = PROB_FLOOR.ln();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != vocab_size {
                return Err(Error::ShapeError(format!(
                    "row {} has {} entries, expected {}",
                    i + 1,
                    row.len(),
                    vocab_size
                )));
            }
            if row.iter().any(|x| x.is_nan() || *x == f64::INFINITY) {
                return Err(Error::ShapeError(format!(
                    "row {} contains a non-finite score",
                    i + 1
                )));
            }
            let normalized = log_softmax(row);
            // Clamp in log space, then renormalize once more so the row
            // still sums to 1 after flooring.
            let clamped: Vec<f64> = normalized.iter().map(|&lp| lp.max(log_floor)).collect();
            let lse = log_sum_exp(&clamped);
            data.extend(clamped.iter().map(|&lp| lp - lse));
        }
        Ok(Self {
            data,
            rows: rows.len(),
            vocab_size,
        })
    }

    /// Matrix whose every row is the uniform distribution over `vocab_size`.
    pub fn uniform(rows: usize, vocab_size: usize) -> Self {
        let lp = -(vocab_size as f64).ln();
        Self {
            data: vec![lp; rows * vocab_size],
            rows,
            vocab_size,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Log-probabilities of row `i` (the distribution for position `i`).
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.vocab_size..(i + 1) * self.vocab_size]
    }

    pub fn logprob(&self, row: usize, token: u32) -> f64 {
        self.data[row * self.vocab_size + token as usize]
    }

    /// Shannon entropy of row `i` in nats.
    pub fn row_entropy(&self, i: usize) -> f64 {
        -self.row(i).iter().map(|&lp| lp.exp() * lp).sum::<f64>()
    }

    /// Returns the first `rows` rows as a new matrix.
    pub fn truncated(&self, rows: usize) -> Result<Self> {
        if rows == 0 || rows > self.rows {
            return Err(Error::ShapeMismatch(format!(
                "cannot take {rows} rows from a matrix with {}",
                self.rows
            )));
        }
        Ok(Self {
            data: self.data[..rows * self.vocab_size].to_vec(),
            rows,
            vocab_size: self.vocab_size,
        })
    }

    /// Verifies the row-normalization and finiteness invariants.
    pub fn validate(&self) -> Result<()> {
        for i in 0..self.rows {
            let row = self.row(i);
            if row.iter().any(|lp| !lp.is_finite() || *lp > 0.0) {
                return Err(Error::ShapeError(format!(
                    "row {} has a non-finite or positive log-probability",
                    i + 1
                )));
            }
            let sum: f64 = row.iter().map(|lp| lp.exp()).sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::ShapeError(format!(
                    "row {} sums to {sum} in probability space",
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

fn log_softmax(xs: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(xs);
    xs.iter().map(|&x| x - lse).collect()
}
