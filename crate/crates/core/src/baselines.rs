//! Zero-shot baseline detectors: average log-likelihood, rank, log-rank,
//! and predictive entropy, all computed from one model's log-probability
//! matrix. Each detector records which extreme indicates the AI class so
//! ROC construction can orient any score without special cases.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::LogProbMatrix;
use crate::roc::Direction;
use crate::tokens::TokenSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Detector {
    Likelihood,
    Rank,
    #[serde(rename = "logrank")]
    LogRank,
    Entropy,
}

impl Detector {
    pub const ALL: [Detector; 4] = [
        Detector::Likelihood,
        Detector::Rank,
        Detector::LogRank,
        Detector::Entropy,
    ];

    /// Which extreme of the score indicates machine text: high
    /// likelihood, low rank, low log-rank, low entropy.
    pub fn ai_direction(self) -> Direction {
        match self {
            Detector::Likelihood => Direction::AiHigh,
            Detector::Rank | Detector::LogRank | Detector::Entropy => Direction::AiLow,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "likelihood" => Ok(Detector::Likelihood),
            "rank" => Ok(Detector::Rank),
            "logrank" | "log-rank" | "log_rank" => Ok(Detector::LogRank),
            "entropy" => Ok(Detector::Entropy),
            other => Err(Error::InvalidConfig(format!("not a detector: {other:?}"))),
        }
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Detector::Likelihood => write!(f, "likelihood"),
            Detector::Rank => write!(f, "rank"),
            Detector::LogRank => write!(f, "logrank"),
            Detector::Entropy => write!(f, "entropy"),
        }
    }
}

/// One detector's output with its AI-side orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineScore {
    pub detector: Detector,
    pub value: f64,
    pub direction: Direction,
}

impl BaselineScore {
    pub fn new(detector: Detector, value: f64) -> Self {
        Self {
            detector,
            value,
            direction: detector.ai_direction(),
        }
    }
}

fn check_shape(m: &LogProbMatrix, tokens: &TokenSequence) -> Result<()> {
    if m.rows() != tokens.len() {
        return Err(Error::ShapeMismatch(format!(
            "matrix has {} rows for {} tokens",
            m.rows(),
            tokens.len()
        )));
    }
    tokens.check_vocab(m.vocab_size())
}

/// Average per-token log probability: (1/L) * sum_i log m[i, x_i].
/// Equals the negated log-perplexity.
pub fn avg_log_likelihood(m: &LogProbMatrix, tokens: &TokenSequence) -> Result<f64> {
    check_shape(m, tokens)?;
    let total: f64 = tokens
        .ids()
        .iter()
        .enumerate()
        .map(|(i, &id)| m.logprob(i, id))
        .sum();
    Ok(total / tokens.len() as f64)
}

/// 1-based rank of the actual token when its row is sorted by descending
/// probability, ties broken by ascending vocabulary index.
fn token_rank(row: &[f64], token: u32) -> usize {
    let target = row[token as usize];
    let mut rank = 1;
    for (j, &lp) in row.iter().enumerate() {
        if lp > target || (lp == target && (j as u32) < token) {
            rank += 1;
        }
    }
    rank
}

/// Mean observed rank of the actual tokens, in [1, V].
pub fn avg_rank(m: &LogProbMatrix, tokens: &TokenSequence) -> Result<f64> {
    check_shape(m, tokens)?;
    let total: usize = tokens
        .ids()
        .iter()
        .enumerate()
        .map(|(i, &id)| token_rank(m.row(i), id))
        .sum();
    Ok(total as f64 / tokens.len() as f64)
}

/// Mean log of the observed rank, in [0, ln V].
pub fn avg_log_rank(m: &LogProbMatrix, tokens: &TokenSequence) -> Result<f64> {
    check_shape(m, tokens)?;
    let total: f64 = tokens
        .ids()
        .iter()
        .enumerate()
        .map(|(i, &id)| (token_rank(m.row(i), id) as f64).ln())
        .sum();
    Ok(total / tokens.len() as f64)
}

/// Mean Shannon entropy of the predictive rows, in [0, ln V].
pub fn avg_entropy(m: &LogProbMatrix) -> Result<f64> {
    if m.rows() == 0 {
        return Err(Error::ShapeMismatch("matrix has no rows".into()));
    }
    let total: f64 = (0..m.rows()).map(|i| m.row_entropy(i)).sum();
    Ok(total / m.rows() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_rows(rows: Vec<Vec<f64>>) -> LogProbMatrix {
        LogProbMatrix::from_probability_rows(rows).unwrap()
    }

    #[test]
    fn uniform_likelihood_is_minus_ln_v() {
        let m = LogProbMatrix::uniform(3, 4);
        let tokens = TokenSequence::new(vec![0, 1, 2]).unwrap();
        let got = avg_log_likelihood(&m, &tokens).unwrap();
        assert!((got + 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn likelihood_negates_hand_log_ppl() {
        let m = from_rows(vec![vec![0.5, 0.5], vec![0.25, 0.75]]);
        let tokens = TokenSequence::new(vec![0, 0]).unwrap();
        let got = avg_log_likelihood(&m, &tokens).unwrap();
        assert!((got + 1.039721).abs() < 1e-6);
    }

    #[test]
    fn rank_sorts_by_descending_probability() {
        let m = from_rows(vec![vec![0.2, 0.5, 0.3]]);
        let tokens = TokenSequence::new(vec![0]).unwrap();
        assert!((avg_rank(&m, &tokens).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn argmax_tokens_rank_one() {
        let m = from_rows(vec![vec![0.7, 0.3], vec![0.1, 0.9]]);
        let tokens = TokenSequence::new(vec![0, 1]).unwrap();
        assert!((avg_rank(&m, &tokens).unwrap() - 1.0).abs() < 1e-12);
        assert!(avg_log_rank(&m, &tokens).unwrap().abs() < 1e-12);
    }

    #[test]
    fn uniform_row_ties_break_by_index() {
        let m = LogProbMatrix::uniform(1, 3);
        let tokens = TokenSequence::new(vec![1]).unwrap();
        assert!((avg_rank(&m, &tokens).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn log_rank_averages_per_position_logs() {
        let m = from_rows(vec![vec![0.2, 0.5, 0.3]]);
        let tokens = TokenSequence::new(vec![0]).unwrap();
        let got = avg_log_rank(&m, &tokens).unwrap();
        assert!((got - 3f64.ln()).abs() < 1e-12);
        assert!((got - 1.098612).abs() < 1e-6);

        // Two positions with ranks {1, 3}: (0 + ln 3) / 2.
        let m2 = from_rows(vec![vec![0.9, 0.05, 0.05], vec![0.2, 0.5, 0.3]]);
        let tokens2 = TokenSequence::new(vec![0, 0]).unwrap();
        let got2 = avg_log_rank(&m2, &tokens2).unwrap();
        assert!((got2 - 0.549306).abs() < 1e-6);
    }

    #[test]
    fn entropy_of_uniform_and_onehot() {
        let m = LogProbMatrix::uniform(2, 4);
        assert!((avg_entropy(&m).unwrap() - 4f64.ln()).abs() < 1e-12);

        let onehot = from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!(avg_entropy(&onehot).unwrap().abs() < 1e-9);
    }

    #[test]
    fn entropy_matches_hand_sum() {
        let m = from_rows(vec![vec![0.75, 0.25]]);
        assert!((avg_entropy(&m).unwrap() - 0.562335).abs() < 1e-6);
    }

    #[test]
    fn directions_are_fixed_per_detector() {
        assert_eq!(Detector::Likelihood.ai_direction(), Direction::AiHigh);
        assert_eq!(Detector::Rank.ai_direction(), Direction::AiLow);
        assert_eq!(Detector::LogRank.ai_direction(), Direction::AiLow);
        assert_eq!(Detector::Entropy.ai_direction(), Direction::AiLow);
        let s = BaselineScore::new(Detector::Rank, 2.5);
        assert_eq!(s.direction, Direction::AiLow);
    }
}
