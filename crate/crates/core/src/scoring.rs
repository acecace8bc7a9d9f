//! Log-perplexity, cross-perplexity, and the Binoculars score.
//!
//! Given observer and performer log-probability matrices over the same
//! token sequence, the Binoculars score is the ratio of the observer's
//! log-perplexity to the observer/performer cross log-perplexity. Human
//! text tends to score high, machine text low. All logs are natural; the
//! ratio itself is base-invariant.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::backend::{check_shared_tokenizer, ModelBackend};
use crate::baselines::{self, Detector};
use crate::error::{Error, Result};
use crate::matrix::LogProbMatrix;
use crate::tokens::TokenSequence;

/// Below this cross-perplexity the ratio is considered unstable and
/// scoring fails with `DegenerateScore`.
pub const DEGENERATE_X_PPL: f64 = 1e-9;

/// Default minimum token count for document scoring.
pub const DEFAULT_MIN_TOKENS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Human,
    Ai,
    Unknown,
}

impl Label {
    /// Numeric form: human = 0, AI = 1.
    pub fn as_int(self) -> Option<u8> {
        match self {
            Label::Human => Some(0),
            Label::Ai => Some(1),
            Label::Unknown => None,
        }
    }

    pub fn parse(s: &str) -> Result<Label> {
        match s.trim().to_ascii_lowercase().as_str() {
            "human" | "0" => Ok(Label::Human),
            "ai" | "1" | "machine" | "llm" => Ok(Label::Ai),
            "unknown" | "" => Ok(Label::Unknown),
            other => Err(Error::Parse {
                line: None,
                msg: format!("not a label: {other:?}"),
            }),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Human => write!(f, "human"),
            Label::Ai => write!(f, "ai"),
            Label::Unknown => write!(f, "unknown"),
        }
    }
}

/// All scores for one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDocument {
    pub doc_id: String,
    pub label: Label,
    pub token_count: usize,
    /// Observer log-perplexity, nats/token.
    pub log_ppl: f64,
    /// Observer/performer cross log-perplexity, nats/token.
    pub x_ppl: f64,
    /// log_ppl / x_ppl.
    pub binoculars: f64,
    /// Extra detector scores keyed by detector name; ordered for stable output.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub baselines: BTreeMap<String, f64>,
}

impl ScoredDocument {
    /// Looks up a score by field name (`binoculars`, `log_ppl`, `x_ppl`,
    /// or any baseline column).
    pub fn score(&self, field: &str) -> Option<f64> {
        match field {
            "binoculars" => Some(self.binoculars),
            "log_ppl" => Some(self.log_ppl),
            "x_ppl" => Some(self.x_ppl),
            other => self.baselines.get(other).copied(),
        }
    }
}

/// Average negative log-likelihood of the actual tokens:
/// -(1/L) * sum_i log Y[i, x_i].
pub fn log_perplexity(observer: &LogProbMatrix, tokens: &TokenSequence) -> Result<f64> {
    check_rows(observer, tokens)?;
    tokens.check_vocab(observer.vocab_size())?;
    let total: f64 = tokens
        .ids()
        .iter()
        .enumerate()
        .map(|(i, &id)| observer.logprob(i, id))
        .sum();
    Ok(-total / tokens.len() as f64)
}

/// Average full-vocabulary cross-entropy between the observer's and the
/// performer's next-token distributions:
/// -(1/L) * sum_i sum_j M1[i,j] * log M2[i,j].
pub fn cross_log_perplexity(
    observer: &LogProbMatrix,
    performer: &LogProbMatrix,
) -> Result<f64> {
    if observer.vocab_size() != performer.vocab_size() {
        return Err(Error::VocabMismatch(format!(
            "observer has V={} but performer has V={}",
            observer.vocab_size(),
            performer.vocab_size()
        )));
    }
    if observer.rows() != performer.rows() {
        return Err(Error::ShapeMismatch(format!(
            "observer has {} rows but performer has {}",
            observer.rows(),
            performer.rows()
        )));
    }
    let l = observer.rows();
    let mut total = 0.0;
    for i in 0..l {
        let obs = observer.row(i);
        let per = performer.row(i);
        let mut pos = 0.0;
        for j in 0..obs.len() {
            pos += obs[j].exp() * per[j];
        }
        total += pos;
    }
    Ok(-total / l as f64)
}

/// The Binoculars score: log-perplexity over cross log-perplexity.
pub fn binoculars_score(
    observer: &LogProbMatrix,
    performer: &LogProbMatrix,
    tokens: &TokenSequence,
) -> Result<f64> {
    let log_ppl = log_perplexity(observer, tokens)?;
    let x_ppl = cross_log_perplexity(observer, performer)?;
    ratio(log_ppl, x_ppl)
}

fn ratio(log_ppl: f64, x_ppl: f64) -> Result<f64> {
    if x_ppl <= DEGENERATE_X_PPL {
        return Err(Error::DegenerateScore {
            x_ppl,
            tolerance: DEGENERATE_X_PPL,
        });
    }
    Ok(log_ppl / x_ppl)
}

fn check_rows(m: &LogProbMatrix, tokens: &TokenSequence) -> Result<()> {
    if m.rows() != tokens.len() {
        return Err(Error::ShapeMismatch(format!(
            "matrix has {} rows for {} tokens",
            m.rows(),
            tokens.len()
        )));
    }
    Ok(())
}

/// Scoring policy for document-level runs.
#[derive(Debug, Clone)]
pub struct ScoreOptions {
    pub min_tokens: usize,
    /// Baseline detectors to evaluate on the observer matrix.
    pub baselines: Vec<Detector>,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        Self {
            min_tokens: DEFAULT_MIN_TOKENS,
            baselines: Vec::new(),
        }
    }
}

/// Tokenizes and scores one document against an observer/performer pair.
pub fn score_document(
    observer: &dyn ModelBackend,
    performer: &dyn ModelBackend,
    doc_id: &str,
    text: &str,
    label: Label,
    opts: &ScoreOptions,
) -> Result<ScoredDocument> {
    check_shared_tokenizer(observer.descriptor(), performer.descriptor())?;
    let tokens = observer.tokenize(text)?;
    if tokens.len() < opts.min_tokens {
        return Err(Error::TextTooShort {
            got: tokens.len(),
            min: opts.min_tokens,
        });
    }
    score_tokens(observer, performer, doc_id, &tokens, label, opts)
}

/// Scores an already-tokenized document.
pub fn score_tokens(
    observer: &dyn ModelBackend,
    performer: &dyn ModelBackend,
    doc_id: &str,
    tokens: &TokenSequence,
    label: Label,
    opts: &ScoreOptions,
) -> Result<ScoredDocument> {
    let obs = observer.next_token_logprobs(tokens)?;
    let per = performer.next_token_logprobs(tokens)?;
    assemble(doc_id, tokens, &obs, &per, label, opts)
}

/// Builds the score record from already-fetched matrices.
pub fn assemble(
    doc_id: &str,
    tokens: &TokenSequence,
    observer: &LogProbMatrix,
    performer: &LogProbMatrix,
    label: Label,
    opts: &ScoreOptions,
) -> Result<ScoredDocument> {
    let log_ppl = log_perplexity(observer, tokens)?;
    let x_ppl = cross_log_perplexity(observer, performer)?;
    let binoculars = ratio(log_ppl, x_ppl)?;
    let mut doc = ScoredDocument {
        doc_id: doc_id.to_string(),
        label,
        token_count: tokens.len(),
        log_ppl,
        x_ppl,
        binoculars,
        baselines: BTreeMap::new(),
    };
    for det in &opts.baselines {
        let value = match det {
            Detector::Likelihood => baselines::avg_log_likelihood(observer, tokens)?,
            Detector::Rank => baselines::avg_rank(observer, tokens)?,
            Detector::LogRank => baselines::avg_log_rank(observer, tokens)?,
            Detector::Entropy => baselines::avg_entropy(observer)?,
        };
        doc.baselines.insert(det.to_string(), value);
    }
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::ngram::{NgramBackend, ReferenceLM};

    fn uniform(l: usize, v: usize) -> LogProbMatrix {
        LogProbMatrix::uniform(l, v)
    }

    fn onehot_rows(targets: &[u32], v: usize) -> LogProbMatrix {
        let rows = targets
            .iter()
            .map(|&t| {
                let mut row = vec![0.0; v];
                row[t as usize] = 1.0;
                row
            })
            .collect();
        LogProbMatrix::from_probability_rows(rows).unwrap()
    }

    #[test]
    fn uniform_log_ppl_is_ln_v() {
        let tokens = TokenSequence::new(vec![0, 1, 2]).unwrap();
        let got = log_perplexity(&uniform(3, 4), &tokens).unwrap();
        assert!((got - 4f64.ln()).abs() < 1e-12);
        assert!((got - 1.386294).abs() < 1e-6);
    }

    #[test]
    fn perfect_prediction_log_ppl_is_zero() {
        let tokens = TokenSequence::new(vec![2, 0, 1]).unwrap();
        let m = onehot_rows(tokens.ids(), 3);
        let got = log_perplexity(&m, &tokens).unwrap();
        // One-hot rows carry the probability floor, so "zero" is within it.
        assert!(got.abs() < 1e-9, "got {got}");
    }

    #[test]
    fn log_ppl_matches_hand_sum() {
        // L=2, actual-token probabilities 0.5 and 0.25.
        let rows = vec![vec![0.5, 0.5], vec![0.25, 0.75]];
        let m = LogProbMatrix::from_probability_rows(rows).unwrap();
        let tokens = TokenSequence::new(vec![0, 0]).unwrap();
        let got = log_perplexity(&m, &tokens).unwrap();
        assert!((got - 1.039721).abs() < 1e-6);
    }

    #[test]
    fn log_ppl_shape_mismatch() {
        let tokens = TokenSequence::new(vec![0, 1]).unwrap();
        assert!(matches!(
            log_perplexity(&uniform(3, 4), &tokens),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn uniform_x_ppl_is_ln_v() {
        let got = cross_log_perplexity(&uniform(5, 7), &uniform(5, 7)).unwrap();
        assert!((got - 7f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn onehot_observer_degenerates_to_performer_log_ppl() {
        let tokens = TokenSequence::new(vec![1, 0]).unwrap();
        let observer = onehot_rows(tokens.ids(), 2);
        let performer =
            LogProbMatrix::from_probability_rows(vec![vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        let x = cross_log_perplexity(&observer, &performer).unwrap();
        let ppl = log_perplexity(&performer, &tokens).unwrap();
        // Observer mass sits on the actual tokens up to the floor.
        assert!((x - ppl).abs() < 1e-6, "x={x} ppl={ppl}");
    }

    #[test]
    fn x_ppl_matches_hand_sum() {
        // L=1, M1=[0.75,0.25], M2=[0.9,0.1].
        let m1 = LogProbMatrix::from_probability_rows(vec![vec![0.75, 0.25]]).unwrap();
        let m2 = LogProbMatrix::from_probability_rows(vec![vec![0.9, 0.1]]).unwrap();
        let got = cross_log_perplexity(&m1, &m2).unwrap();
        assert!((got - 0.654667).abs() < 1e-6);
    }

    #[test]
    fn both_uniform_binoculars_is_one() {
        let tokens = TokenSequence::new(vec![3, 1, 4, 1]).unwrap();
        let got = binoculars_score(&uniform(4, 6), &uniform(4, 6), &tokens).unwrap();
        assert!((got - 1.0).abs() < 1e-12);
    }

    #[test]
    fn binoculars_matches_hand_ratio() {
        // L=2, observer uniform V=2, performer rows [0.9, 0.1], tokens [0,0].
        let observer = uniform(2, 2);
        let performer =
            LogProbMatrix::from_probability_rows(vec![vec![0.9, 0.1], vec![0.9, 0.1]]).unwrap();
        let tokens = TokenSequence::new(vec![0, 0]).unwrap();
        let got = binoculars_score(&observer, &performer, &tokens).unwrap();
        assert!((got - 0.575716).abs() < 1e-6);
    }

    #[test]
    fn near_zero_x_ppl_is_degenerate() {
        // V=1: both distributions are the point mass, x_ppl ~ floor-level.
        let m = LogProbMatrix::from_probability_rows(vec![vec![1.0]]).unwrap();
        let tokens = TokenSequence::new(vec![0]).unwrap();
        assert!(matches!(
            binoculars_score(&m, &m, &tokens),
            Err(Error::DegenerateScore { .. })
        ));
    }

    #[test]
    fn short_text_is_rejected() {
        let lm = ReferenceLM::train("a b c d e a b c d e", 2, 0.5).unwrap();
        let observer = NgramBackend::new(lm.clone());
        let performer = NgramBackend::new(lm.with_smoothing(1.0).unwrap());
        let err = score_document(
            &observer,
            &performer,
            "doc",
            "a b c",
            Label::Human,
            &ScoreOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::TextTooShort { got: 3, min: 50 }));
    }

    #[test]
    fn mismatched_pair_is_rejected_before_scoring() {
        let a = NgramBackend::new(ReferenceLM::train("a b a b", 2, 0.5).unwrap());
        let b = NgramBackend::new(ReferenceLM::train("x y z x y z", 2, 0.5).unwrap());
        let err = score_document(
            &a,
            &b,
            "doc",
            "a b",
            Label::Human,
            &ScoreOptions {
                min_tokens: 1,
                baselines: Vec::new(),
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::VocabMismatch(_)));
    }

    #[test]
    fn scoring_is_deterministic() {
        let lm = ReferenceLM::train("t u v w t u v w t u", 3, 0.5).unwrap();
        let observer = NgramBackend::new(lm.clone());
        let performer = NgramBackend::new(lm.with_smoothing(1.0).unwrap());
        let opts = ScoreOptions {
            min_tokens: 1,
            baselines: vec![Detector::Likelihood, Detector::Entropy],
        };
        let one = score_document(&observer, &performer, "d", "t u v w", Label::Ai, &opts).unwrap();
        let two = score_document(&observer, &performer, "d", "t u v w", Label::Ai, &opts).unwrap();
        assert_eq!(one, two);
        assert!((one.binoculars - one.log_ppl / one.x_ppl).abs() < 1e-12);
    }
}
