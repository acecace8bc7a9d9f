//! Corpus construction pipeline: cleaning, chunking, prompt building,
//! and the JSONL record format.
//!
//! Cleaning strips HTML tags, entities, URLs, and control characters
//! (replacing each span with a space), normalizes whitespace, and rejects
//! documents under a minimum word count. Letters, digits, and punctuation
//! of any script survive, so Vietnamese diacritics are preserved.
//! Chunking keeps every emitted chunk within [min_tokens, max_tokens),
//! splitting at sentence boundaries when possible and at whitespace
//! otherwise.

use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::backend::ngram::PieceVocab;
use crate::error::{Error, Result};

/// Default minimum word count for cleaning and minimum/maximum token
/// counts for chunking.
pub const DEFAULT_MIN_WORDS: usize = 50;
pub const DEFAULT_PROMPT_TOKENS: usize = 50;
pub const DEFAULT_MAX_CHUNK_TOKENS: usize = 512;

/// Token counting and prefix extraction for pipeline purposes.
pub trait CorpusTokenizer {
    fn token_count(&self, text: &str) -> Result<usize>;

    /// Detokenization of the first `n` tokens; `TextTooShort` when the
    /// text has fewer.
    fn token_prefix(&self, text: &str, n: usize) -> Result<String>;
}

/// Whitespace tokenization: one token per word. The pipeline default.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl CorpusTokenizer for WhitespaceTokenizer {
    fn token_count(&self, text: &str) -> Result<usize> {
        Ok(text.split_whitespace().count())
    }

    fn token_prefix(&self, text: &str, n: usize) -> Result<String> {
        let words: Vec<&str> = text.split_whitespace().collect();
        if words.len() < n {
            return Err(Error::TextTooShort {
                got: words.len(),
                min: n,
            });
        }
        Ok(words[..n].join(" "))
    }
}

impl CorpusTokenizer for PieceVocab {
    fn token_count(&self, text: &str) -> Result<usize> {
        if text.trim().is_empty() {
            return Ok(0);
        }
        Ok(self.tokenize(text)?.len())
    }

    fn token_prefix(&self, text: &str, n: usize) -> Result<String> {
        let tokens = self.tokenize(text)?;
        if tokens.len() < n {
            return Err(Error::TextTooShort {
                got: tokens.len(),
                min: n,
            });
        }
        let prefix = crate::tokens::TokenSequence::new(tokens.ids()[..n].to_vec())?;
        self.detokenize(&prefix)
    }
}

/// Cleaning either yields a normalized string or rejects the document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CleanOutcome {
    Cleaned(String),
    Rejected { word_count: usize },
}

impl CleanOutcome {
    pub fn cleaned(self) -> Option<String> {
        match self {
            CleanOutcome::Cleaned(s) => Some(s),
            CleanOutcome::Rejected { .. } => None,
        }
    }
}

static HTML_TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<[^>]*>").unwrap());
static URL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?:https?://|www\.)\S+").unwrap());
static HTML_ENTITY: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"&#?[A-Za-z0-9]+;").unwrap());

/// Strips markup and normalizes whitespace; rejects documents whose
/// cleaned word count falls under `min_words`. Idempotent.
pub fn clean_text(raw: &str, min_words: usize) -> CleanOutcome {
    let text = HTML_TAG.replace_all(raw, " ");
    let text = URL.replace_all(&text, " ");
    let text = HTML_ENTITY.replace_all(&text, " ");
    let text: String = text
        .chars()
        .map(|c| if c.is_control() { ' ' } else { c })
        .collect();
    let normalized = text.split_whitespace().collect::<Vec<_>>().join(" ");
    let word_count = normalized.split_whitespace().count();
    if word_count < min_words {
        CleanOutcome::Rejected { word_count }
    } else {
        CleanOutcome::Cleaned(normalized)
    }
}

fn is_sentence_end(word: &str) -> bool {
    let trimmed = word.trim_end_matches(['"', '\'', '\u{201d}', '\u{2019}', ')', ']', '}']);
    trimmed.ends_with(['.', '!', '?', '\u{2026}', '\u{3002}'])
}

/// Splits a document into chunks whose token counts lie in
/// [min_tokens, max_tokens). Splits prefer sentence boundaries and fall
/// back to whitespace; concatenating the chunks reproduces the
/// whitespace-normalized text. Requires max_tokens >= 2 * min_tokens so
/// that bounded chunks always exist. A single word carrying max_tokens or
/// more tokens is split mid-word as a last resort.
pub fn chunk_document(
    text: &str,
    tokenizer: &dyn CorpusTokenizer,
    max_tokens: usize,
    min_tokens: usize,
) -> Result<Vec<String>> {
    if max_tokens < 2 * min_tokens.max(1) {
        return Err(Error::InvalidConfig(format!(
            "max_tokens {max_tokens} must be at least twice min_tokens {min_tokens}"
        )));
    }
    let words: Vec<String> = text.split_whitespace().map(str::to_string).collect();
    if words.is_empty() {
        return Ok(Vec::new());
    }
    let mut counted: Vec<(String, usize)> = Vec::with_capacity(words.len());
    for word in words {
        let n = tokenizer.token_count(&word)?.max(1);
        if n >= max_tokens {
            // Last resort: split the word itself.
            for piece in split_long_word(&word, max_tokens) {
                let pn = tokenizer.token_count(&piece)?.max(1);
                counted.push((piece, pn));
            }
        } else {
            counted.push((word, n));
        }
    }
    let total: usize = counted.iter().map(|(_, n)| n).sum();
    if total < max_tokens {
        return Ok(vec![text.trim().to_string()]);
    }

    // Sentence units, word-split when a sentence alone reaches the bound.
    let mut atoms: Vec<Vec<(String, usize)>> = Vec::new();
    let mut sentence: Vec<(String, usize)> = Vec::new();
    let mut sentence_tokens = 0usize;
    let flush = |sentence: &mut Vec<(String, usize)>,
                 sentence_tokens: &mut usize,
                 atoms: &mut Vec<Vec<(String, usize)>>| {
        if sentence.is_empty() {
            return;
        }
        if *sentence_tokens < max_tokens {
            atoms.push(std::mem::take(sentence));
        } else {
            let mut run: Vec<(String, usize)> = Vec::new();
            let mut run_tokens = 0usize;
            for wc in sentence.drain(..) {
                if run_tokens + wc.1 >= max_tokens && !run.is_empty() {
                    atoms.push(std::mem::take(&mut run));
                    run_tokens = 0;
                }
                run_tokens += wc.1;
                run.push(wc);
            }
            if !run.is_empty() {
                atoms.push(run);
            }
        }
        *sentence_tokens = 0;
    };
    for wc in counted {
        let ends = is_sentence_end(&wc.0);
        sentence_tokens += wc.1;
        sentence.push(wc);
        if ends {
            flush(&mut sentence, &mut sentence_tokens, &mut atoms);
        }
    }
    flush(&mut sentence, &mut sentence_tokens, &mut atoms);

    // Pack atoms greedily, closing a chunk before it would reach the bound.
    let mut chunks: Vec<Vec<(String, usize)>> = Vec::new();
    let mut cur: Vec<(String, usize)> = Vec::new();
    let mut cur_tokens = 0usize;
    for atom in atoms {
        let atom_tokens: usize = atom.iter().map(|(_, n)| n).sum();
        if cur_tokens + atom_tokens >= max_tokens && !cur.is_empty() {
            chunks.push(std::mem::take(&mut cur));
            cur_tokens = 0;
        }
        cur_tokens += atom_tokens;
        cur.extend(atom);
    }
    if !cur.is_empty() {
        chunks.push(cur);
    }

    rebalance(&mut chunks, min_tokens, max_tokens);

    Ok(chunks
        .into_iter()
        .map(|chunk| {
            chunk
                .iter()
                .map(|(w, _)| w.as_str())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect())
}

fn split_long_word(word: &str, max_tokens: usize) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let step = (max_tokens / 2).max(1);
    chars
        .chunks(step)
        .map(|c| c.iter().collect::<String>())
        .collect()
}

/// Moves words across chunk boundaries until every chunk holds at least
/// `min_tokens`. Undersized middle chunks borrow forward; an undersized
/// tail borrows from its predecessor or merges into it.
fn rebalance(chunks: &mut Vec<Vec<(String, usize)>>, min_tokens: usize, max_tokens: usize) {
    let tokens_of = |c: &Vec<(String, usize)>| c.iter().map(|(_, n)| n).sum::<usize>();
    let mut i = 0;
    while i < chunks.len() {
        while tokens_of(&chunks[i]) < min_tokens && i + 1 < chunks.len() {
            let moved = chunks[i + 1].remove(0);
            chunks[i].push(moved);
            if chunks[i + 1].is_empty() {
                chunks.remove(i + 1);
            }
        }
        i += 1;
    }
    // The tail may still be short; borrow backward or merge.
    if chunks.len() >= 2 {
        let last = chunks.len() - 1;
        if tokens_of(&chunks[last]) < min_tokens {
            let combined = tokens_of(&chunks[last - 1]) + tokens_of(&chunks[last]);
            if combined < max_tokens {
                let tail = chunks.pop().unwrap();
                chunks.last_mut().unwrap().extend(tail);
            } else {
                while tokens_of(&chunks[last]) < min_tokens
                    && tokens_of(&chunks[last - 1]) > min_tokens
                {
                    let moved = chunks[last - 1].pop().unwrap();
                    chunks[last].insert(0, moved);
                }
            }
        }
    }
}

/// The detokenized first `n_tokens` tokens of `text`.
pub fn make_prompt(text: &str, tokenizer: &dyn CorpusTokenizer, n_tokens: usize) -> Result<String> {
    tokenizer.token_prefix(text, n_tokens)
}

/// Removes the leading prompt from generated output, matching at word
/// level so whitespace variants still align. Returns the continuation.
pub fn strip_prompt(generated: &str, prompt: &str) -> Result<String> {
    let gen_words: Vec<&str> = generated.split_whitespace().collect();
    let prompt_words: Vec<&str> = prompt.split_whitespace().collect();
    if prompt_words.is_empty()
        || gen_words.len() < prompt_words.len()
        || gen_words[..prompt_words.len()] != prompt_words[..]
    {
        return Err(Error::PromptMismatch);
    }
    Ok(gen_words[prompt_words.len()..].join(" "))
}

/// One corpus line: human text plus optional prompt, generated text, and
/// generation metadata. Unrecognized keys are preserved round-trip.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ai_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gen_meta: Option<Value>,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub extra: Map<String, Value>,
}

/// Where the generated text lives in a dataset's JSONL lines. Datasets
/// name the key after the generating model.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct JsonlSchema {
    /// When set, every record must carry this key; when unset, `ai_text`
    /// is read if present.
    pub ai_text_key: Option<String>,
}

impl JsonlSchema {
    pub fn with_key(key: impl Into<String>) -> Self {
        Self {
            ai_text_key: Some(key.into()),
        }
    }

    fn effective_key(&self) -> &str {
        self.ai_text_key.as_deref().unwrap_or("ai_text")
    }
}

fn take_string(map: &mut Map<String, Value>, key: &str, line: usize) -> Result<Option<String>> {
    match map.remove(key) {
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(other) => Err(Error::Parse {
            line: Some(line),
            msg: format!("key {key:?} must be a string, got {other}"),
        }),
    }
}

/// Parses one JSONL line. `line` is 1-based and used in diagnostics.
pub fn parse_record(json: &str, schema: &JsonlSchema, line: usize) -> Result<CorpusRecord> {
    let value: Value = serde_json::from_str(json).map_err(|e| Error::Parse {
        line: Some(line),
        msg: e.to_string(),
    })?;
    let Value::Object(mut map) = value else {
        return Err(Error::Parse {
            line: Some(line),
            msg: "each line must be a JSON object".into(),
        });
    };
    let text = take_string(&mut map, "text", line)?.ok_or(Error::MissingKey {
        line,
        key: "text".into(),
    })?;
    let prompt = take_string(&mut map, "prompt", line)?;
    let ai_text = take_string(&mut map, schema.effective_key(), line)?;
    if schema.ai_text_key.is_some() && ai_text.is_none() {
        return Err(Error::MissingKey {
            line,
            key: schema.effective_key().to_string(),
        });
    }
    let gen_meta = map.remove("gen_meta");
    Ok(CorpusRecord {
        text,
        prompt,
        ai_text,
        gen_meta,
        extra: map,
    })
}

/// Serializes one record to a JSON line under the schema's key naming.
pub fn record_to_json(record: &CorpusRecord, schema: &JsonlSchema) -> Result<String> {
    let mut map = Map::new();
    map.insert("text".into(), Value::String(record.text.clone()));
    if let Some(prompt) = &record.prompt {
        map.insert("prompt".into(), Value::String(prompt.clone()));
    }
    if let Some(ai_text) = &record.ai_text {
        map.insert(
            schema.effective_key().to_string(),
            Value::String(ai_text.clone()),
        );
    }
    if let Some(meta) = &record.gen_meta {
        map.insert("gen_meta".into(), meta.clone());
    }
    for (k, v) in &record.extra {
        map.insert(k.clone(), v.clone());
    }
    Ok(serde_json::to_string(&Value::Object(map))?)
}

pub fn read_jsonl(path: &Path, schema: &JsonlSchema) -> Result<Vec<CorpusRecord>> {
    let text = std::fs::read_to_string(path)?;
    read_jsonl_str(&text, schema)
}

pub fn read_jsonl_str(text: &str, schema: &JsonlSchema) -> Result<Vec<CorpusRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(idx, line)| parse_record(line, schema, idx + 1))
        .collect()
}

pub fn write_jsonl(records: &[CorpusRecord], path: &Path, schema: &JsonlSchema) -> Result<()> {
    let mut out = String::new();
    for record in records {
        out.push_str(&record_to_json(record, schema)?);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Table-1 style corpus statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub doc_count: usize,
    pub human_docs: usize,
    pub ai_docs: usize,
    pub median_tokens_human: Option<f64>,
    pub median_tokens_ai: Option<f64>,
}

/// Median with the mean-of-middle-two rule for even counts.
fn median(mut counts: Vec<usize>) -> Option<f64> {
    if counts.is_empty() {
        return None;
    }
    counts.sort_unstable();
    let n = counts.len();
    Some(if n % 2 == 1 {
        counts[n / 2] as f64
    } else {
        (counts[n / 2 - 1] + counts[n / 2]) as f64 / 2.0
    })
}

pub fn corpus_stats(
    records: &[CorpusRecord],
    tokenizer: &dyn CorpusTokenizer,
) -> Result<CorpusStats> {
    if records.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut human = Vec::new();
    let mut ai = Vec::new();
    for record in records {
        human.push(tokenizer.token_count(&record.text)?);
        if let Some(ai_text) = &record.ai_text {
            ai.push(tokenizer.token_count(ai_text)?);
        }
    }
    Ok(CorpusStats {
        doc_count: human.len() + ai.len(),
        human_docs: human.len(),
        ai_docs: ai.len(),
        median_tokens_human: median(human),
        median_tokens_ai: median(ai),
    })
}
