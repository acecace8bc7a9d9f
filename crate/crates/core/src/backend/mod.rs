//! Interchangeable language-model sources.
//!
//! Three backend kinds provide tokenization and per-position next-token
//! log-probability matrices: the built-in smoothed n-gram LM, a
//! precomputed-matrix file reader, and a remote-inference client. Backends
//! are immutable after construction and safe for concurrent reads.

pub mod matrix_file;
pub mod ngram;
#[cfg(feature = "remote")]
pub mod remote;

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::LogProbMatrix;
use crate::tokens::TokenSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    Ngram,
    MatrixFile,
    Remote,
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendKind::Ngram => write!(f, "ngram"),
            BackendKind::MatrixFile => write!(f, "matrix-file"),
            BackendKind::Remote => write!(f, "remote"),
        }
    }
}

/// What a backend reports about itself. Observer and performer backends
/// used together must report identical `vocab_size` and `tokenizer`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendDescriptor {
    pub kind: BackendKind,
    /// Model name, file path, or endpoint identifier.
    pub identifier: String,
    pub vocab_size: usize,
    /// Tokenizer identity fingerprint.
    pub tokenizer: String,
}

/// A source of token sequences and next-token log-probability matrices.
pub trait ModelBackend: Send + Sync {
    fn descriptor(&self) -> &BackendDescriptor;

    fn tokenize(&self, text: &str) -> Result<TokenSequence>;

    fn detokenize(&self, tokens: &TokenSequence) -> Result<String>;

    /// Row `i` is the model's distribution over the token at position `i`
    /// given positions `< i`, with a BOS context for the first position.
    fn next_token_logprobs(&self, tokens: &TokenSequence) -> Result<LogProbMatrix>;

    /// Batch variant; backends with a wire protocol override this to batch
    /// requests. Results are in submission order.
    fn next_token_logprobs_batch(&self, seqs: &[TokenSequence]) -> Result<Vec<LogProbMatrix>> {
        seqs.iter().map(|s| self.next_token_logprobs(s)).collect()
    }
}

/// Shared-tokenizer guard: rejects observer/performer pairs that do not
/// report the same vocabulary size and tokenizer identity. Runs before any
/// scoring.
pub fn check_shared_tokenizer(
    observer: &BackendDescriptor,
    performer: &BackendDescriptor,
) -> Result<()> {
    if observer.vocab_size != performer.vocab_size {
        return Err(Error::VocabMismatch(format!(
            "observer reports vocab_size {} but performer reports {}",
            observer.vocab_size, performer.vocab_size
        )));
    }
    if observer.tokenizer != performer.tokenizer {
        return Err(Error::VocabMismatch(format!(
            "observer tokenizer {:?} differs from performer tokenizer {:?}",
            observer.tokenizer, performer.tokenizer
        )));
    }
    Ok(())
}

/// Declarative backend configuration, as written in run-config files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BackendSpec {
    Ngram {
        /// Train a fresh model from this whitespace corpus file...
        #[serde(default, skip_serializing_if = "Option::is_none")]
        corpus: Option<PathBuf>,
        /// ...or load a model serialized by `lm train`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        model: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        order: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        smoothing_k: Option<f64>,
    },
    MatrixFile {
        path: PathBuf,
    },
    Remote {
        model_id: String,
        /// Overrides the BINOSCOPE_ENDPOINT environment variable.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        endpoint: Option<String>,
    },
}

pub const DEFAULT_NGRAM_ORDER: usize = 3;
pub const DEFAULT_SMOOTHING_K: f64 = 0.5;

/// Instantiates a backend from its configuration.
pub fn open_backend(spec: &BackendSpec) -> Result<Box<dyn ModelBackend>> {
    match spec {
        BackendSpec::Ngram {
            corpus,
            model,
            order,
            smoothing_k,
        } => {
            let lm = match (corpus, model) {
                (Some(path), None) => {
                    let text = std::fs::read_to_string(path)?;
                    ngram::ReferenceLM::train(
                        &text,
                        order.unwrap_or(DEFAULT_NGRAM_ORDER),
                        smoothing_k.unwrap_or(DEFAULT_SMOOTHING_K),
                    )?
                }
                (None, Some(path)) => {
                    let json = std::fs::read_to_string(path)?;
                    let lm = ngram::ReferenceLM::from_json(&json)?;
                    match smoothing_k {
                        Some(k) => lm.with_smoothing(*k)?,
                        None => lm,
                    }
                }
                _ => {
                    return Err(Error::InvalidConfig(
                        "ngram backend needs exactly one of `corpus` or `model`".into(),
                    ))
                }
            };
            Ok(Box::new(ngram::NgramBackend::new(lm)))
        }
        BackendSpec::MatrixFile { path } => {
            Ok(Box::new(matrix_file::MatrixFileBackend::open(path)?))
        }
        #[cfg(feature = "remote")]
        BackendSpec::Remote { model_id, endpoint } => {
            let opts = remote::RemoteOptions::from_env(endpoint.clone())?;
            Ok(Box::new(remote::RemoteBackend::connect(model_id, opts)?))
        }
        #[cfg(not(feature = "remote"))]
        BackendSpec::Remote { .. } => Err(Error::UnknownBackend(
            "remote support was not compiled into this build".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shared_tokenizer_guard_rejects_size_mismatch() {
        let a = BackendDescriptor {
            kind: BackendKind::Ngram,
            identifier: "a".into(),
            vocab_size: 4,
            tokenizer: "t".into(),
        };
        let mut b = a.clone();
        b.vocab_size = 5;
        assert!(matches!(
            check_shared_tokenizer(&a, &b),
            Err(Error::VocabMismatch(_))
        ));
        b.vocab_size = 4;
        b.tokenizer = "other".into();
        assert!(matches!(
            check_shared_tokenizer(&a, &b),
            Err(Error::VocabMismatch(_))
        ));
        b.tokenizer = "t".into();
        assert!(check_shared_tokenizer(&a, &b).is_ok());
    }

    #[test]
    fn backend_spec_round_trips_through_json() {
        let spec = BackendSpec::Ngram {
            corpus: Some("corpus.txt".into()),
            model: None,
            order: Some(3),
            smoothing_k: Some(0.5),
        };
        let json = serde_json::to_string(&spec).unwrap();
        let back: BackendSpec = serde_json::from_str(&json).unwrap();
        assert!(matches!(back, BackendSpec::Ngram { .. }));
    }

    #[test]
    fn ngram_spec_requires_corpus_or_model() {
        let spec = BackendSpec::Ngram {
            corpus: None,
            model: None,
            order: None,
            smoothing_k: None,
        };
        assert!(matches!(
            open_backend(&spec),
            Err(Error::InvalidConfig(_))
        ));
    }
}
