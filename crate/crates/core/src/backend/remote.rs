//! Remote-inference client for real observer/performer model pairs.
//!
//! JSON over HTTP. The server declares its vocabulary size, tokenizer
//! identity, and context window under `GET /v1/models/<id>`; token
//! sequences longer than the declared window are rejected client-side
//! with `ContextOverflow` rather than silently truncated. Requests are
//! batched (default 10 documents per request) and batches may be issued
//! concurrently; responses are reassembled in submission order.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::backend::{BackendDescriptor, BackendKind, ModelBackend};
use crate::error::{Error, Result};
use crate::matrix::LogProbMatrix;
use crate::tokens::TokenSequence;

pub const ENDPOINT_ENV: &str = "BINOSCOPE_ENDPOINT";
pub const TOKEN_ENV: &str = "BINOSCOPE_TOKEN";

pub const DEFAULT_RETRIES: u32 = 3;
pub const DEFAULT_BATCH_SIZE: usize = 10;

#[derive(Debug, Clone)]
pub struct RemoteOptions {
    pub endpoint: String,
    pub token: Option<String>,
    /// Total attempts per request before giving up.
    pub retries: u32,
    /// First backoff delay; doubles on every retry.
    pub initial_backoff: Duration,
    /// Documents per logprobs request.
    pub batch_size: usize,
    /// Maximum batches in flight at once.
    pub concurrency: usize,
    pub timeout: Duration,
}

impl RemoteOptions {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            token: None,
            retries: DEFAULT_RETRIES,
            initial_backoff: Duration::from_millis(100),
            batch_size: DEFAULT_BATCH_SIZE,
            concurrency: 2,
            timeout: Duration::from_secs(30),
        }
    }

    /// Resolves endpoint and credentials from the environment unless an
    /// explicit endpoint override is given.
    pub fn from_env(endpoint_override: Option<String>) -> Result<Self> {
        let endpoint = endpoint_override
            .or_else(|| std::env::var(ENDPOINT_ENV).ok())
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "remote backend needs an endpoint (set {ENDPOINT_ENV} or pass one explicitly)"
                ))
            })?;
        let mut opts = Self::new(endpoint);
        opts.token = std::env::var(TOKEN_ENV).ok();
        Ok(opts)
    }
}

#[derive(Debug, Clone, Deserialize)]
struct ModelInfo {
    vocab_size: usize,
    context_window: usize,
    tokenizer: String,
}

#[derive(Serialize)]
struct TokenizeRequest<'a> {
    model: &'a str,
    text: &'a str,
}

#[derive(Deserialize)]
struct TokenizeResponse {
    tokens: Vec<u32>,
}

#[derive(Serialize)]
struct DetokenizeRequest<'a> {
    model: &'a str,
    tokens: &'a [u32],
}

#[derive(Deserialize)]
struct DetokenizeResponse {
    text: String,
}

#[derive(Serialize)]
struct LogprobsRequest<'a> {
    model: &'a str,
    sequences: Vec<&'a [u32]>,
}

#[derive(Deserialize)]
struct LogprobsResponse {
    logprobs: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug)]
pub struct RemoteBackend {
    http: reqwest::blocking::Client,
    opts: RemoteOptions,
    model_id: String,
    info: ModelInfo,
    descriptor: BackendDescriptor,
}

impl RemoteBackend {
    /// Fetches the model descriptor from the server and builds the client.
    pub fn connect(model_id: &str, opts: RemoteOptions) -> Result<Self> {
        let http = reqwest::blocking::Client::builder()
            .timeout(opts.timeout)
            .build()
            .map_err(|e| Error::RemoteUnavailable {
                attempts: 0,
                msg: e.to_string(),
            })?;
        let url = format!("{}/v1/models/{}", opts.endpoint.trim_end_matches('/'), model_id);
        let info: ModelInfo = with_retries(&opts, || {
            let mut req = http.get(&url);
            if let Some(token) = &opts.token {
                req = req.bearer_auth(token);
            }
            send_json(req)
        })?;
        let descriptor = BackendDescriptor {
            kind: BackendKind::Remote,
            identifier: model_id.to_string(),
            vocab_size: info.vocab_size,
            tokenizer: info.tokenizer.clone(),
        };
        Ok(Self {
            http,
            opts,
            model_id: model_id.to_string(),
            info,
            descriptor,
        })
    }

    pub fn context_window(&self) -> usize {
        self.info.context_window
    }

    fn post_json<B: Serialize, T: for<'de> Deserialize<'de>>(
        &self,
        path: &str,
        body: &B,
    ) -> Result<T> {
        let url = format!("{}{}", self.opts.endpoint.trim_end_matches('/'), path);
        with_retries(&self.opts, || {
            let mut req = self.http.post(&url).json(body);
            if let Some(token) = &self.opts.token {
                req = req.bearer_auth(token);
            }
            send_json(req)
        })
    }

    fn check_window(&self, tokens: &TokenSequence) -> Result<()> {
        if tokens.len() > self.info.context_window {
            return Err(Error::ContextOverflow {
                got: tokens.len(),
                window: self.info.context_window,
            });
        }
        Ok(())
    }

    fn fetch_batch(&self, seqs: &[&TokenSequence]) -> Result<Vec<LogProbMatrix>> {
        let body = LogprobsRequest {
            model: &self.model_id,
            sequences: seqs.iter().map(|s| s.ids()).collect(),
        };
        let resp: LogprobsResponse = self.post_json("/v1/logprobs", &body)?;
        if resp.logprobs.len() != seqs.len() {
            return Err(Error::ShapeMismatch(format!(
                "server returned {} matrices for {} sequences",
                resp.logprobs.len(),
                seqs.len()
            )));
        }
        resp.logprobs
            .into_iter()
            .zip(seqs)
            .map(|(rows, seq)| {
                if rows.len() != seq.len() {
                    return Err(Error::ShapeMismatch(format!(
                        "server returned {} rows for a {}-token sequence",
                        rows.len(),
                        seq.len()
                    )));
                }
                let m = LogProbMatrix::from_logits(rows)?;
                if m.vocab_size() != self.info.vocab_size {
                    return Err(Error::VocabMismatch(format!(
                        "server rows have {} columns but the model declares vocab_size {}",
                        m.vocab_size(),
                        self.info.vocab_size
                    )));
                }
                Ok(m)
            })
            .collect()
    }
}

impl ModelBackend for RemoteBackend {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    fn tokenize(&self, text: &str) -> Result<TokenSequence> {
        if text.trim().is_empty() {
            return Err(Error::EmptyText);
        }
        let resp: TokenizeResponse = self.post_json(
            "/v1/tokenize",
            &TokenizeRequest {
                model: &self.model_id,
                text,
            },
        )?;
        TokenSequence::new(resp.tokens)
    }

    fn detokenize(&self, tokens: &TokenSequence) -> Result<String> {
        let resp: DetokenizeResponse = self.post_json(
            "/v1/detokenize",
            &DetokenizeRequest {
                model: &self.model_id,
                tokens: tokens.ids(),
            },
        )?;
        Ok(resp.text)
    }

    fn next_token_logprobs(&self, tokens: &TokenSequence) -> Result<LogProbMatrix> {
        self.check_window(tokens)?;
        let mut out = self.fetch_batch(&[tokens])?;
        Ok(out.remove(0))
    }

    fn next_token_logprobs_batch(&self, seqs: &[TokenSequence]) -> Result<Vec<LogProbMatrix>> {
        for seq in seqs {
            self.check_window(seq)?;
        }
        let batches: Vec<&[TokenSequence]> = seqs.chunks(self.opts.batch_size.max(1)).collect();
        let results: Mutex<Vec<Option<Result<Vec<LogProbMatrix>>>>> =
            Mutex::new((0..batches.len()).map(|_| None).collect());
        let next = AtomicUsize::new(0);
        let workers = self.opts.concurrency.clamp(1, batches.len().max(1));

        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let idx = next.fetch_add(1, Ordering::SeqCst);
                    if idx >= batches.len() {
                        break;
                    }
                    let refs: Vec<&TokenSequence> = batches[idx].iter().collect();
                    let res = self.fetch_batch(&refs);
                    results.lock().unwrap()[idx] = Some(res);
                });
            }
        });

        // Reassemble in submission order.
        let mut out = Vec::with_capacity(seqs.len());
        for slot in results.into_inner().unwrap() {
            out.extend(slot.expect("batch worker left a hole")?);
        }
        Ok(out)
    }
}

/// One HTTP exchange outcome: either a decoded body, a terminal error, or
/// a retryable failure.
enum Exchange<T> {
    Ok(T),
    Fatal(Error),
    Retry(String),
}

fn send_json<T: for<'de> Deserialize<'de>>(req: reqwest::blocking::RequestBuilder) -> Exchange<T> {
    match req.send() {
        Err(e) => Exchange::Retry(e.to_string()),
        Ok(resp) => {
            let status = resp.status();
            if status == reqwest::StatusCode::UNAUTHORIZED
                || status == reqwest::StatusCode::FORBIDDEN
            {
                return Exchange::Fatal(Error::AuthError(format!(
                    "server answered {status}"
                )));
            }
            if status.is_server_error() || status == reqwest::StatusCode::TOO_MANY_REQUESTS {
                return Exchange::Retry(format!("server answered {status}"));
            }
            if !status.is_success() {
                return Exchange::Fatal(Error::Parse {
                    line: None,
                    msg: format!("server answered {status}"),
                });
            }
            match resp.json::<T>() {
                Ok(body) => Exchange::Ok(body),
                Err(e) => Exchange::Fatal(Error::Parse {
                    line: None,
                    msg: format!("bad response body: {e}"),
                }),
            }
        }
    }
}

fn with_retries<T>(opts: &RemoteOptions, mut attempt: impl FnMut() -> Exchange<T>) -> Result<T> {
    let attempts = opts.retries.max(1);
    let mut backoff = opts.initial_backoff;
    let mut last = String::new();
    for i in 0..attempts {
        match attempt() {
            Exchange::Ok(v) => return Ok(v),
            Exchange::Fatal(e) => return Err(e),
            Exchange::Retry(msg) => {
                last = msg;
                if i + 1 < attempts {
                    std::thread::sleep(backoff);
                    backoff *= 2;
                }
            }
        }
    }
    Err(Error::RemoteUnavailable {
        attempts,
        msg: last,
    })
}
