//! Regenerates the committed demo fixtures under fixtures/:
//!
//!   cargo run -p binoscope-cli --example make_fixtures
//!
//! Everything is seeded, so the output is stable across runs.

use std::path::Path;

use binoscope_core::backend::ngram::ReferenceLM;
use binoscope_core::corpus::{make_prompt, CorpusRecord, JsonlSchema, WhitespaceTokenizer};
use binoscope_core::synth::{generate_corpus, split_documents, ChainSpec};

const AI_KEY: &str = "ngram-demo-generated_text";

fn main() -> anyhow::Result<()> {
    let dir = Path::new("fixtures");
    std::fs::create_dir_all(dir)?;

    let corpus_a = generate_corpus(&ChainSpec::corpus_a(), 6_000, 11);
    let corpus_b = generate_corpus(&ChainSpec::corpus_b(), 3_000, 22);
    std::fs::write(dir.join("corpus_a.txt"), wrap(&corpus_a, 20))?;
    std::fs::write(dir.join("corpus_b.txt"), wrap(&corpus_b, 20))?;

    // Eight paired records: human text from the held-out chain, generated
    // text sampled from the performer model conditioned on the human
    // document's opening tokens.
    let observer = ReferenceLM::train(&corpus_a, 3, 0.5)?;
    let performer = observer.with_smoothing(1.0)?;
    let tokenizer = WhitespaceTokenizer;
    let mut records = Vec::new();
    for (i, text) in split_documents(&corpus_b, 120).into_iter().take(8).enumerate() {
        let prompt = make_prompt(&text, &tokenizer, 50)?;
        let prompt_tokens = performer.vocab().tokenize(&prompt)?;
        let continuation =
            performer.sample_continuation(prompt_tokens.ids(), 120, 7_000 + i as u64)?;
        let ai_text = performer.vocab().detokenize(&continuation)?;
        records.push(CorpusRecord {
            text,
            prompt: Some(prompt),
            ai_text: Some(ai_text),
            gen_meta: Some(serde_json::json!({
                "model": "ngram-demo(order=3,k=1)",
                "seed": 7_000 + i,
                "prompt_tokens": 50,
            })),
            extra: Default::default(),
        });
    }
    let schema = JsonlSchema::with_key(AI_KEY);
    binoscope_core::corpus::write_jsonl(&records, &dir.join("news_tiny.jsonl"), &schema)?;

    let config = serde_json::json!({
        "observer":  { "kind": "ngram", "corpus": "fixtures/corpus_a.txt", "order": 3, "smoothing_k": 0.5 },
        "performer": { "kind": "ngram", "corpus": "fixtures/corpus_a.txt", "order": 3, "smoothing_k": 1.0 },
        "corpus": "fixtures/news_tiny.jsonl",
        "ai_text_key": AI_KEY,
        "score_field": "binoculars",
        "direction": "ai-low",
        "min_tokens": 50,
        "baselines": ["likelihood", "rank", "logrank", "entropy"],
    });
    std::fs::write(
        dir.join("config.json"),
        format!("{}\n", serde_json::to_string_pretty(&config)?),
    )?;

    eprintln!("wrote fixtures/corpus_a.txt, corpus_b.txt, news_tiny.jsonl, config.json");
    Ok(())
}

fn wrap(words: &str, per_line: usize) -> String {
    let mut out = String::new();
    for (i, w) in words.split_whitespace().enumerate() {
        if i > 0 {
            out.push(if i % per_line == 0 { '\n' } else { ' ' });
        }
        out.push_str(w);
    }
    out.push('\n');
    out
}
