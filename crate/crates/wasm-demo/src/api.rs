//! Demo operations behind the browser bindings. Everything returns JSON
//! strings so the page needs no generated types, and everything here runs
//! natively for testing.
//!
//! The demo pair is an order-3 reference LM trained on a built-in
//! synthetic corpus (observer k = 0.5, performer k = 1.0). "AI" text is
//! sampled from the performer; "human" text comes from a second chain
//! over the same inventory with different transitions.

use std::sync::OnceLock;

use serde::Serialize;

use binoscope_core::backend::ngram::{NgramBackend, ReferenceLM};
use binoscope_core::backend::ModelBackend;
use binoscope_core::roc::{
    auroc, build_roc, closest_point_threshold, tpr_at_fpr_threshold, youden_threshold, Direction,
    LabeledScore,
};
use binoscope_core::scoring::{score_document, Label, ScoreOptions};
use binoscope_core::synth::{generate_corpus, ChainSpec};

const TRAIN_TOKENS: usize = 8_000;
const TRAIN_SEED: u64 = 11;
/// Demo documents may be short; scoring still needs a handful of tokens.
const DEMO_MIN_TOKENS: usize = 10;

struct DemoPair {
    observer: NgramBackend,
    performer: NgramBackend,
}

fn demo_pair() -> &'static DemoPair {
    static PAIR: OnceLock<DemoPair> = OnceLock::new();
    PAIR.get_or_init(|| {
        let corpus = generate_corpus(&ChainSpec::corpus_a(), TRAIN_TOKENS, TRAIN_SEED);
        let observer_lm = ReferenceLM::train(&corpus, 3, 0.5).expect("demo corpus trains");
        let performer_lm = observer_lm.with_smoothing(1.0).expect("k > 0");
        DemoPair {
            observer: NgramBackend::new(observer_lm),
            performer: NgramBackend::new(performer_lm),
        }
    })
}

fn opts() -> ScoreOptions {
    ScoreOptions {
        min_tokens: DEMO_MIN_TOKENS,
        baselines: binoscope_core::baselines::Detector::ALL.to_vec(),
    }
}

#[derive(Serialize)]
struct ScoreOut {
    token_count: usize,
    log_ppl: f64,
    x_ppl: f64,
    binoculars: f64,
    baselines: std::collections::BTreeMap<String, f64>,
    threshold: f64,
    verdict: String,
}

/// Scores pasted text against the demo pair and classifies it at the
/// given cutoff (AI when the score is at or below it).
pub fn score_text_json(text: &str, threshold: f64) -> Result<String, String> {
    let pair = demo_pair();
    let doc = score_document(
        &pair.observer,
        &pair.performer,
        "pasted",
        text,
        Label::Unknown,
        &opts(),
    )
    .map_err(|e| e.to_string())?;
    let verdict = binoscope_core::report::classify(doc.binoculars, threshold, Direction::AiLow);
    let out = ScoreOut {
        token_count: doc.token_count,
        log_ppl: doc.log_ppl,
        x_ppl: doc.x_ppl,
        binoculars: doc.binoculars,
        baselines: doc.baselines,
        threshold,
        verdict: verdict.to_string(),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct RocPointOut {
    threshold: f64,
    fpr: f64,
    tpr: f64,
}

#[derive(Serialize)]
struct ChoiceOut {
    method: String,
    t_star: f64,
    objective: f64,
    fpr: f64,
    tpr: f64,
}

#[derive(Serialize)]
struct ScatterOut {
    token_count: usize,
    binoculars: f64,
    label: String,
}

#[derive(Serialize)]
struct CalibrationOut {
    auroc: f64,
    ai_mean: f64,
    human_mean: f64,
    roc: Vec<RocPointOut>,
    choices: Vec<ChoiceOut>,
    scores: Vec<ScatterOut>,
}

fn doc_length(base: usize, i: usize, seed: u64) -> usize {
    let span = base.max(60) - 50;
    50 + ((seed as usize).wrapping_mul(31).wrapping_add(i.wrapping_mul(7919)) % (span + 1))
}

/// Builds a synthetic labeled corpus, scores it, and returns the ROC
/// curve, AUROC, the three calibrated thresholds, and the per-document
/// score/length scatter.
pub fn calibrate_demo_json(
    n_per_class: usize,
    doc_tokens: usize,
    seed: u64,
    epsilon: f64,
) -> Result<String, String> {
    if n_per_class == 0 || n_per_class > 500 {
        return Err("documents per class must be in 1..=500".into());
    }
    if !(60..=2000).contains(&doc_tokens) {
        return Err("document length must be in 60..=2000 tokens".into());
    }
    let pair = demo_pair();
    let opts = opts();

    let mut samples = Vec::with_capacity(2 * n_per_class);
    let mut scatter = Vec::with_capacity(2 * n_per_class);
    let mut ai_sum = 0.0;
    let mut human_sum = 0.0;

    for i in 0..n_per_class {
        let len = doc_length(doc_tokens, i, seed);
        let tokens = pair
            .performer
            .lm()
            .sample(len, seed.wrapping_add(i as u64))
            .map_err(|e| e.to_string())?;
        let text = pair
            .performer
            .lm()
            .vocab()
            .detokenize(&tokens)
            .map_err(|e| e.to_string())?;
        let doc = score_document(
            &pair.observer,
            &pair.performer,
            &format!("ai-{i}"),
            &text,
            Label::Ai,
            &opts,
        )
        .map_err(|e| e.to_string())?;
        ai_sum += doc.binoculars;
        samples.push(LabeledScore {
            score: doc.binoculars,
            label: Label::Ai,
        });
        scatter.push(ScatterOut {
            token_count: doc.token_count,
            binoculars: doc.binoculars,
            label: "ai".into(),
        });
    }

    // Held-out human-proxy text: one long run of the second chain, sliced
    // into documents.
    let human_corpus = generate_corpus(
        &ChainSpec::corpus_b(),
        n_per_class * doc_tokens + doc_tokens,
        seed.wrapping_add(0x5EED),
    );
    let words: Vec<&str> = human_corpus.split_whitespace().collect();
    let mut cursor = 0usize;
    for i in 0..n_per_class {
        let len = doc_length(doc_tokens, i, seed.wrapping_add(1));
        let end = (cursor + len).min(words.len());
        let text = words[cursor..end].join(" ");
        cursor = end;
        let doc = score_document(
            &pair.observer,
            &pair.performer,
            &format!("human-{i}"),
            &text,
            Label::Human,
            &opts,
        )
        .map_err(|e| e.to_string())?;
        human_sum += doc.binoculars;
        samples.push(LabeledScore {
            score: doc.binoculars,
            label: Label::Human,
        });
        scatter.push(ScatterOut {
            token_count: doc.token_count,
            binoculars: doc.binoculars,
            label: "human".into(),
        });
    }

    let curve = build_roc(&samples, Direction::AiLow).map_err(|e| e.to_string())?;
    let choices = vec![
        youden_threshold(&curve),
        closest_point_threshold(&curve),
        tpr_at_fpr_threshold(&curve, epsilon).map_err(|e| e.to_string())?,
    ];
    let out = CalibrationOut {
        auroc: auroc(&curve),
        ai_mean: ai_sum / n_per_class as f64,
        human_mean: human_sum / n_per_class as f64,
        roc: curve
            .points
            .iter()
            .map(|p| RocPointOut {
                threshold: p.threshold,
                fpr: p.fpr,
                tpr: p.tpr,
            })
            .collect(),
        choices: choices
            .iter()
            .map(|c| ChoiceOut {
                method: c.method.to_string(),
                t_star: c.t_star,
                objective: c.objective,
                fpr: c.fpr,
                tpr: c.tpr,
            })
            .collect(),
        scores: scatter,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct SampleOut {
    text: String,
    kind: String,
}

/// Deterministic sample text to paste into the scorer: machine text from
/// the performer model or human-proxy text from the held-out chain.
pub fn generate_sample_json(kind: &str, seed: u64, tokens: usize) -> Result<String, String> {
    if !(10..=2000).contains(&tokens) {
        return Err("sample length must be in 10..=2000 tokens".into());
    }
    let pair = demo_pair();
    let text = match kind {
        "ai" => {
            let sampled = pair
                .performer
                .lm()
                .sample(tokens, seed)
                .map_err(|e| e.to_string())?;
            pair.performer
                .lm()
                .vocab()
                .detokenize(&sampled)
                .map_err(|e| e.to_string())?
        }
        "human" => {
            let corpus = generate_corpus(&ChainSpec::corpus_b(), tokens, seed);
            corpus
        }
        other => return Err(format!("unknown sample kind {other:?}")),
    };
    serde_json::to_string(&SampleOut {
        text,
        kind: kind.to_string(),
    })
    .map_err(|e| e.to_string())
}
