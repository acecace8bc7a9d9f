//! Crate-wide error type.

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("input text is empty after trimming")]
    EmptyText,

    #[error("unknown or unsupported backend: {0}")]
    UnknownBackend(String),

    #[error("tokenization is not supported by {kind} backends")]
    TokenizeUnsupported { kind: String },

    #[error("symbol {symbol:?} is outside the tokenizer inventory")]
    UnknownSymbol { symbol: String },

    #[error("corpus has {got} tokens but order {order} requires at least {order}")]
    CorpusTooSmall { got: usize, order: usize },

    #[error("vocabulary mismatch: {0}")]
    VocabMismatch(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("ragged or malformed matrix: {0}")]
    ShapeError(String),

    #[error("parse error{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, msg: String },

    #[error("remote backend unavailable after {attempts} attempts: {msg}")]
    RemoteUnavailable { attempts: u32, msg: String },

    #[error("remote authentication failed: {0}")]
    AuthError(String),

    #[error("sequence of {got} tokens exceeds the server context window of {window}")]
    ContextOverflow { got: usize, window: usize },

    #[error("cross-perplexity {x_ppl} is below the degenerate-score tolerance {tolerance}")]
    DegenerateScore { x_ppl: f64, tolerance: f64 },

    #[error("text has {got} tokens, below the minimum of {min}")]
    TextTooShort { got: usize, min: usize },

    #[error("both classes must be present to build an ROC curve")]
    SingleClassInput,

    #[error("document {doc_id} is missing the score field {field:?}")]
    MissingScore { doc_id: String, field: String },

    #[error("prediction and truth lengths differ: {predictions} vs {truth}")]
    LengthMismatch { predictions: usize, truth: usize },

    #[error("generated text does not begin with the prompt")]
    PromptMismatch,

    #[error("record at line {line} is missing key {key:?}")]
    MissingKey { line: usize, key: String },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
