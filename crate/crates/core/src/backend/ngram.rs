//! Built-in smoothed n-gram causal language model.
//!
//! This backend is the desk-scale stand-in for a real observer/performer
//! model pair: deterministic, CPU-only, and exact enough to exercise every
//! scoring and calibration path. Tokenization is whitespace words with a
//! character fallback for words outside the inventory; the documented
//! normalization is that runs of whitespace collapse to single spaces and
//! fallback words detokenize as space-separated characters.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::backend::{BackendDescriptor, BackendKind, ModelBackend};
use crate::error::{Error, Result};
use crate::matrix::LogProbMatrix;
use crate::tokens::TokenSequence;

/// Sentinel id for the beginning-of-sequence context marker. Never a real
/// vocabulary id.
pub const BOS: u32 = u32::MAX;

/// Token inventory shared by an observer/performer pair.
///
/// The inventory is every whitespace-separated word of the training corpus
/// plus every character of the corpus, in first-appearance order. Unknown
/// words tokenize through the character entries.
#[derive(Debug, Clone, PartialEq)]
pub struct PieceVocab {
    pieces: Vec<String>,
    index: HashMap<String, u32>,
}

impl PieceVocab {
    pub fn from_corpus(corpus: &str) -> Self {
        let mut vocab = Self {
            pieces: Vec::new(),
            index: HashMap::new(),
        };
        for word in corpus.split_whitespace() {
            vocab.intern(word);
        }
        for ch in corpus.chars().filter(|c| !c.is_whitespace()) {
            vocab.intern(&ch.to_string());
        }
        vocab
    }

    fn from_pieces(pieces: Vec<String>) -> Self {
        let index = pieces
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i as u32))
            .collect();
        Self { pieces, index }
    }

    fn intern(&mut self, piece: &str) -> u32 {
        if let Some(&id) = self.index.get(piece) {
            return id;
        }
        let id = self.pieces.len() as u32;
        self.pieces.push(piece.to_string());
        self.index.insert(piece.to_string(), id);
        id
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn piece(&self, id: u32) -> Option<&str> {
        self.pieces.get(id as usize).map(|s| s.as_str())
    }

    pub fn tokenize(&self, text: &str) -> Result<TokenSequence> {
        if text.trim().is_empty() {
            return Err(Error::EmptyText);
        }
        let mut ids = Vec::new();
        for word in text.split_whitespace() {
            if let Some(&id) = self.index.get(word) {
                ids.push(id);
                continue;
            }
            for ch in word.chars() {
                match self.index.get(&ch.to_string()) {
                    Some(&id) => ids.push(id),
                    None => {
                        return Err(Error::UnknownSymbol {
                            symbol: ch.to_string(),
                        })
                    }
                }
            }
        }
        TokenSequence::new(ids)
    }

    pub fn detokenize(&self, tokens: &TokenSequence) -> Result<String> {
        let mut out = String::new();
        for &id in tokens.ids() {
            let piece = self.piece(id).ok_or_else(|| {
                Error::VocabMismatch(format!(
                    "token id {id} is out of range for vocabulary size {}",
                    self.len()
                ))
            })?;
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(piece);
        }
        Ok(out)
    }

    /// FNV-1a fingerprint over the ordered inventory; the tokenizer
    /// identity used by the shared-tokenizer guard.
    pub fn fingerprint(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for piece in &self.pieces {
            for &b in piece.as_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
            h ^= 0xff;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("ngram-fnv:{h:016x}")
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
struct ContextCounts {
    total: u64,
    by_token: HashMap<u32, u64>,
}

/// Add-k smoothed n-gram causal LM. Deterministic given (corpus, order, k).
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceLM {
    order: usize,
    smoothing_k: f64,
    vocab: PieceVocab,
    contexts: HashMap<Vec<u32>, ContextCounts>,
}

impl ReferenceLM {
    /// Trains from a whitespace corpus. Contexts are BOS-padded so every
    /// position, including the first, has a defined distribution.
    pub fn train(corpus: &str, order: usize, smoothing_k: f64) -> Result<Self> {
        if order < 1 {
            return Err(Error::InvalidConfig("n-gram order must be >= 1".into()));
        }
        if !(smoothing_k > 0.0) || !smoothing_k.is_finite() {
            return Err(Error::InvalidConfig(
                "smoothing constant k must be a positive finite number".into(),
            ));
        }
        let vocab = PieceVocab::from_corpus(corpus);
        let stream = match vocab.tokenize(corpus) {
            Ok(seq) => seq,
            Err(Error::EmptyText) => {
                return Err(Error::CorpusTooSmall { got: 0, order });
            }
            Err(e) => return Err(e),
        };
        if stream.len() < order {
            return Err(Error::CorpusTooSmall {
                got: stream.len(),
                order,
            });
        }
        let mut contexts: HashMap<Vec<u32>, ContextCounts> = HashMap::new();
        let ids = stream.ids();
        for (i, &token) in ids.iter().enumerate() {
            let ctx = padded_context(ids, i, order - 1);
            let entry = contexts.entry(ctx).or_default();
            entry.total += 1;
            *entry.by_token.entry(token).or_insert(0) += 1;
        }
        Ok(Self {
            order,
            smoothing_k,
            vocab,
            contexts,
        })
    }

    /// Same counts and vocabulary with a different smoothing constant.
    pub fn with_smoothing(&self, smoothing_k: f64) -> Result<Self> {
        if !(smoothing_k > 0.0) || !smoothing_k.is_finite() {
            return Err(Error::InvalidConfig(
                "smoothing constant k must be a positive finite number".into(),
            ));
        }
        Ok(Self {
            smoothing_k,
            ..self.clone()
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smoothing_k(&self) -> f64 {
        self.smoothing_k
    }

    pub fn vocab(&self) -> &PieceVocab {
        &self.vocab
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    /// P(token | context) under add-k smoothing:
    /// (count(c, w) + k) / (count(c) + k * V).
    pub fn conditional(&self, context: &[u32], token: u32) -> f64 {
        let v = self.vocab.len() as f64;
        let k = self.smoothing_k;
        match self.contexts.get(context) {
            Some(counts) => {
                let c = counts.by_token.get(&token).copied().unwrap_or(0) as f64;
                (c + k) / (counts.total as f64 + k * v)
            }
            None => 1.0 / v,
        }
    }

    /// Full conditional distribution over the vocabulary for one context.
    pub fn distribution(&self, context: &[u32]) -> Vec<f64> {
        let v = self.vocab.len();
        let k = self.smoothing_k;
        match self.contexts.get(context) {
            Some(counts) => {
                let denom = counts.total as f64 + k * v as f64;
                let mut row = vec![k / denom; v];
                for (&token, &c) in &counts.by_token {
                    row[token as usize] = (c as f64 + k) / denom;
                }
                row
            }
            None => vec![1.0 / v as f64; v],
        }
    }

    /// One distribution row per position of `tokens`, BOS-padded.
    pub fn logprob_matrix(&self, tokens: &TokenSequence) -> Result<LogProbMatrix> {
        tokens.check_vocab(self.vocab.len())?;
        let ids = tokens.ids();
        let rows: Vec<Vec<f64>> = (0..ids.len())
            .map(|i| self.distribution(&padded_context(ids, i, self.order - 1)))
            .collect();
        LogProbMatrix::from_probability_rows(rows)
    }

    /// Draws a sequence from the model's conditionals. Deterministic given
    /// (model, length, seed).
    pub fn sample(&self, length: usize, seed: u64) -> Result<TokenSequence> {
        self.sample_continuation(&[], length, seed)
    }

    /// Draws `length` tokens conditioned on `prompt`; returns the
    /// continuation only.
    pub fn sample_continuation(
        &self,
        prompt: &[u32],
        length: usize,
        seed: u64,
    ) -> Result<TokenSequence> {
        if length < 1 {
            return Err(Error::InvalidConfig("sample length must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ids: Vec<u32> = prompt.to_vec();
        for i in prompt.len()..prompt.len() + length {
            let ctx = padded_context(&ids, i, self.order - 1);
            let dist = self.distribution(&ctx);
            let r: f64 = rng.gen();
            let mut acc = 0.0;
            let mut chosen = (dist.len() - 1) as u32;
            for (j, &p) in dist.iter().enumerate() {
                acc += p;
                if r < acc {
                    chosen = j as u32;
                    break;
                }
            }
            ids.push(chosen);
        }
        TokenSequence::new(ids.split_off(prompt.len()))
    }

    fn to_repr(&self) -> ReferenceLMRepr {
        let mut contexts: Vec<ContextRepr> = self
            .contexts
            .iter()
            .map(|(ctx, counts)| {
                let mut by_token: Vec<(u32, u64)> =
                    counts.by_token.iter().map(|(&t, &c)| (t, c)).collect();
                by_token.sort_unstable();
                ContextRepr {
                    context: ctx.clone(),
                    counts: by_token,
                }
            })
            .collect();
        contexts.sort_by(|a, b| a.context.cmp(&b.context));
        ReferenceLMRepr {
            order: self.order,
            smoothing_k: self.smoothing_k,
            pieces: self.vocab.pieces.clone(),
            contexts,
        }
    }

    fn from_repr(repr: ReferenceLMRepr) -> Result<Self> {
        if repr.order < 1 {
            return Err(Error::InvalidConfig("n-gram order must be >= 1".into()));
        }
        if !(repr.smoothing_k > 0.0) {
            return Err(Error::InvalidConfig("smoothing constant must be > 0".into()));
        }
        let vocab = PieceVocab::from_pieces(repr.pieces);
        let contexts = repr
            .contexts
            .into_iter()
            .map(|c| {
                let total = c.counts.iter().map(|(_, n)| n).sum();
                let by_token = c.counts.into_iter().collect();
                (c.context, ContextCounts { total, by_token })
            })
            .collect();
        Ok(Self {
            order: repr.order,
            smoothing_k: repr.smoothing_k,
            vocab,
            contexts,
        })
    }

    /// Serializes to a stable JSON model file (contexts sorted).
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_repr())?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Self::from_repr(serde_json::from_str(json)?)
    }
}

#[derive(Serialize, Deserialize)]
struct ReferenceLMRepr {
    order: usize,
    smoothing_k: f64,
    pieces: Vec<String>,
    contexts: Vec<ContextRepr>,
}

#[derive(Serialize, Deserialize)]
struct ContextRepr {
    context: Vec<u32>,
    counts: Vec<(u32, u64)>,
}

/// The (order - 1) ids preceding position `i`, BOS-padded on the left.
fn padded_context(ids: &[u32], i: usize, context_len: usize) -> Vec<u32> {
    let mut ctx = Vec::with_capacity(context_len);
    for back in (1..=context_len).rev() {
        if i >= back {
            ctx.push(ids[i - back]);
        } else {
            ctx.push(BOS);
        }
    }
    ctx
}

/// An n-gram LM exposed through the backend interface.
#[derive(Debug, Clone)]
pub struct NgramBackend {
    lm: ReferenceLM,
    descriptor: BackendDescriptor,
}

impl NgramBackend {
    pub fn new(lm: ReferenceLM) -> Self {
        let descriptor = BackendDescriptor {
            kind: BackendKind::Ngram,
            identifier: format!("ngram(order={},k={})", lm.order(), lm.smoothing_k()),
            vocab_size: lm.vocab_size(),
            tokenizer: lm.vocab().fingerprint(),
        };
        Self { lm, descriptor }
    }

    pub fn lm(&self) -> &ReferenceLM {
        &self.lm
    }
}

impl ModelBackend for NgramBackend {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    fn tokenize(&self, text: &str) -> Result<TokenSequence> {
        self.lm.vocab().tokenize(text)
    }

    fn detokenize(&self, tokens: &TokenSequence) -> Result<String> {
        self.lm.vocab().detokenize(tokens)
    }

    fn next_token_logprobs(&self, tokens: &TokenSequence) -> Result<LogProbMatrix> {
        self.lm.logprob_matrix(tokens)
    }
}
