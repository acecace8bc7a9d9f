//! Zero-shot detection of machine-generated text by the Binoculars
//! perplexity / cross-perplexity ratio, with ROC-based global threshold
//! calibration and full evaluation reporting.
//!
//! The pipeline runs against interchangeable language-model backends: a
//! built-in smoothed n-gram causal LM (so everything is verifiable on a
//! desk, without GPU inference), a precomputed-matrix file reader, and a
//! remote-inference client for real observer/performer pairs.

pub mod artifacts;
pub mod backend;
pub mod baselines;
pub mod corpus;
pub mod error;
pub mod matrix;
pub mod report;
pub mod roc;
pub mod scoring;
pub mod synth;
pub mod tokens;

pub use backend::{
    check_shared_tokenizer, open_backend, BackendDescriptor, BackendKind, BackendSpec,
    ModelBackend,
};
pub use error::{Error, Result};
pub use matrix::LogProbMatrix;
pub use scoring::{Label, ScoredDocument};
pub use tokens::TokenSequence;
