//! Command implementations. Output artifacts are deterministic for
//! deterministic backends: stable row order, fixed column order, and
//! shortest round-trip float formatting.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use binoscope_core::artifacts::{
    read_scored_csv, roc_csv_to_string, scored_csv_to_string, ScoredRow, ThresholdReport,
};
use binoscope_core::backend::ngram::ReferenceLM;
use binoscope_core::backend::{check_shared_tokenizer, open_backend};
use binoscope_core::baselines::Detector;
use binoscope_core::corpus::{
    chunk_document, clean_text, corpus_stats, make_prompt, read_jsonl, write_jsonl, CleanOutcome,
    CorpusRecord, JsonlSchema, WhitespaceTokenizer,
};
use binoscope_core::error::Error;
use binoscope_core::report::{classification_report, classify, ClassificationReport, ConfusionMatrix};
use binoscope_core::roc::{
    auroc, build_roc, closest_point_threshold, tpr_at_fpr_threshold, youden_threshold, Direction,
    LabeledScore, Method,
};
use binoscope_core::scoring::{assemble, Label, ScoreOptions};
use binoscope_core::tokens::TokenSequence;

use crate::config::RunConfig;

pub struct ScoreArgs {
    pub config: RunConfig,
    pub corpus: PathBuf,
    pub out: PathBuf,
}

pub fn cmd_score(args: &ScoreArgs) -> Result<()> {
    let config = &args.config;
    let observer_spec = config
        .observer
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("config is missing the observer backend".into()))?;
    let performer_spec = config
        .performer
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("config is missing the performer backend".into()))?;
    let observer = open_backend(observer_spec)?;
    let performer = open_backend(performer_spec)?;
    check_shared_tokenizer(observer.descriptor(), performer.descriptor())?;

    let schema = JsonlSchema {
        ai_text_key: config.ai_text_key.clone(),
    };
    let records = read_jsonl(&args.corpus, &schema)?;

    let opts = ScoreOptions {
        min_tokens: config.min_tokens(),
        baselines: config.baselines.clone().unwrap_or_default(),
    };

    // Tokenize everything first so remote backends can batch.
    let mut kept: Vec<(String, Label, TokenSequence)> = Vec::new();
    let mut skipped = 0usize;
    for (i, record) in records.iter().enumerate() {
        let line = i + 1;
        let mut docs: Vec<(String, Label, &str)> = vec![(
            format!("{line:04}-human"),
            Label::Human,
            record.text.as_str(),
        )];
        if let Some(ai_text) = &record.ai_text {
            docs.push((format!("{line:04}-ai"), Label::Ai, ai_text.as_str()));
        }
        for (doc_id, label, text) in docs {
            let tokens = observer.tokenize(text)?;
            if tokens.len() < opts.min_tokens {
                skipped += 1;
                continue;
            }
            // An explicit max_tokens in the config caps document length.
            if config.max_tokens.is_some_and(|max| tokens.len() > max) {
                skipped += 1;
                continue;
            }
            kept.push((doc_id, label, tokens));
        }
    }

    let seqs: Vec<TokenSequence> = kept.iter().map(|(_, _, t)| t.clone()).collect();
    let observer_matrices = observer.next_token_logprobs_batch(&seqs)?;
    let performer_matrices = performer.next_token_logprobs_batch(&seqs)?;

    let mut scored = Vec::with_capacity(kept.len());
    for (((doc_id, label, tokens), obs), per) in kept
        .iter()
        .zip(&observer_matrices)
        .zip(&performer_matrices)
    {
        scored.push(assemble(doc_id, tokens, obs, per, *label, &opts)?);
    }

    std::fs::write(&args.out, scored_csv_to_string(&scored)?)
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    if scored.is_empty() {
        eprintln!(
            "warning: no document passed the {}-token minimum; wrote a header-only CSV",
            opts.min_tokens
        );
    }
    eprintln!(
        "scored {} documents ({} skipped below {} tokens) -> {}",
        scored.len(),
        skipped,
        opts.min_tokens,
        args.out.display()
    );
    Ok(())
}

fn labeled_scores(rows: &[ScoredRow], field: &str) -> Result<Vec<LabeledScore>> {
    let mut samples = Vec::with_capacity(rows.len());
    for row in rows {
        if row.label == Label::Unknown {
            continue;
        }
        let score = row.score(field).ok_or_else(|| Error::MissingScore {
            doc_id: row.doc_id.clone(),
            field: field.to_string(),
        })?;
        samples.push(LabeledScore {
            score,
            label: row.label,
        });
    }
    Ok(samples)
}

pub struct CalibrateArgs {
    pub scored: PathBuf,
    pub score_field: String,
    pub direction: Direction,
    pub methods: Vec<Method>,
    pub epsilon: f64,
    pub roc_out: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

pub fn cmd_calibrate(args: &CalibrateArgs) -> Result<()> {
    let rows = read_scored_csv(&args.scored)?;
    let samples = labeled_scores(&rows, &args.score_field)?;
    let curve = build_roc(&samples, args.direction)?;
    let mut choices = Vec::new();
    for method in &args.methods {
        let choice = match method {
            Method::Youden => youden_threshold(&curve),
            Method::Closest => closest_point_threshold(&curve),
            Method::TprAtFpr => tpr_at_fpr_threshold(&curve, args.epsilon)?,
        };
        if choice.warning {
            eprintln!(
                "warning: no threshold satisfies FPR <= {}; returning the all-negative sentinel",
                args.epsilon
            );
        }
        choices.push(choice);
    }
    let report = ThresholdReport {
        score_field: args.score_field.clone(),
        direction: args.direction,
        auroc: auroc(&curve),
        positive_count: curve.positive_count,
        negative_count: curve.negative_count,
        choices,
    };
    if let Some(path) = &args.roc_out {
        std::fs::write(path, roc_csv_to_string(&curve)?)
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    let json = report.to_json()?;
    match &args.out {
        Some(path) => {
            std::fs::write(path, &json)
                .with_context(|| format!("cannot write {}", path.display()))?;
            eprintln!(
                "calibrated {} thresholds (AUROC {:.4}) -> {}",
                report.choices.len(),
                report.auroc,
                path.display()
            );
        }
        None => print!("{json}"),
    }
    Ok(())
}

/// Resolves the cutoffs an evaluation-style command should use, honoring
/// the mutual exclusion between explicit values and calibration output.
pub fn resolve_thresholds(
    flag_thresholds: &[(String, f64)],
    from_report: Option<&Path>,
    config: &RunConfig,
) -> Result<Vec<(String, f64)>> {
    match (flag_thresholds.is_empty(), from_report) {
        (false, Some(_)) => {
            bail!("--threshold and --from-report are mutually exclusive")
        }
        (false, None) => Ok(flag_thresholds.to_vec()),
        (true, Some(path)) => {
            let report = ThresholdReport::from_json(
                &std::fs::read_to_string(path)
                    .with_context(|| format!("cannot read {}", path.display()))?,
            )?;
            Ok(report
                .choices
                .iter()
                .map(|c| (c.method.to_string(), c.t_star))
                .collect())
        }
        (true, None) => Ok(config.resolved_thresholds()),
    }
}

pub struct EvaluateArgs {
    pub scored: PathBuf,
    pub thresholds: Vec<(String, f64)>,
    pub score_field: String,
    pub direction: Direction,
    pub out: Option<PathBuf>,
    pub quiet: bool,
}

#[derive(serde::Serialize)]
struct EvaluationEntry {
    threshold: String,
    t_star: f64,
    report: ClassificationReport,
}

#[derive(serde::Serialize)]
struct EvaluationReport {
    score_field: String,
    direction: Direction,
    entries: Vec<EvaluationEntry>,
}

fn evaluate_at(
    rows: &[ScoredRow],
    field: &str,
    direction: Direction,
    t_star: f64,
) -> Result<ClassificationReport> {
    let mut predictions = Vec::new();
    let mut truth = Vec::new();
    for row in rows {
        if row.label == Label::Unknown {
            continue;
        }
        let score = row.score(field).ok_or_else(|| Error::MissingScore {
            doc_id: row.doc_id.clone(),
            field: field.to_string(),
        })?;
        predictions.push(classify(score, t_star, direction));
        truth.push(row.label);
    }
    let cm = ConfusionMatrix::from_labels(&predictions, &truth)?;
    Ok(classification_report(&cm)?)
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let rows = read_scored_csv(&args.scored)?;
    let mut entries = Vec::new();
    for (name, t_star) in &args.thresholds {
        let report = evaluate_at(&rows, &args.score_field, args.direction, *t_star)?;
        if !args.quiet {
            println!(
                "== {} (t* = {}, {} {}) ==",
                name, t_star, args.direction, args.score_field
            );
            println!("{}", report.render());
        }
        entries.push(EvaluationEntry {
            threshold: name.clone(),
            t_star: *t_star,
            report,
        });
    }
    if let Some(path) = &args.out {
        let report = EvaluationReport {
            score_field: args.score_field.clone(),
            direction: args.direction,
            entries,
        };
        let mut json = serde_json::to_string_pretty(&report)?;
        json.push('\n');
        std::fs::write(path, json).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

pub struct SweepArgs {
    pub scored: PathBuf,
    pub thresholds: Vec<(String, f64)>,
    pub bounds: Vec<usize>,
    pub score_field: String,
    pub direction: Direction,
    pub out: PathBuf,
}

/// One row per (minimum token bound, threshold): accuracy and macro-F1 on
/// the subset of documents at or above the bound. Empty buckets are
/// flagged, not dropped.
pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let rows = read_scored_csv(&args.scored)?;
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record([
        "min_token_bound",
        "threshold",
        "accuracy",
        "f1",
        "doc_count",
        "empty",
    ])?;
    for &bound in &args.bounds {
        let subset: Vec<&ScoredRow> = rows
            .iter()
            .filter(|r| r.label != Label::Unknown)
            .map(|r| {
                r.token_count
                    .map(|_| r)
                    .ok_or_else(|| Error::Parse {
                        line: None,
                        msg: format!("row {} has no token_count; the sweep needs it", r.doc_id),
                    })
            })
            .collect::<std::result::Result<Vec<_>, _>>()?
            .into_iter()
            .filter(|r| r.token_count.unwrap() >= bound)
            .collect();
        for (name, t_star) in &args.thresholds {
            if subset.is_empty() {
                writer.write_record([
                    bound.to_string(),
                    name.clone(),
                    String::new(),
                    String::new(),
                    "0".into(),
                    "true".into(),
                ])?;
                continue;
            }
            let mut predictions = Vec::new();
            let mut truth = Vec::new();
            for row in &subset {
                let score = row
                    .score(&args.score_field)
                    .ok_or_else(|| Error::MissingScore {
                        doc_id: row.doc_id.clone(),
                        field: args.score_field.clone(),
                    })?;
                predictions.push(classify(score, *t_star, args.direction));
                truth.push(row.label);
            }
            let cm = ConfusionMatrix::from_labels(&predictions, &truth)?;
            let report = classification_report(&cm)?;
            writer.write_record([
                bound.to_string(),
                name.clone(),
                report.accuracy.to_string(),
                report.macro_avg.f1.to_string(),
                subset.len().to_string(),
                "false".into(),
            ])?;
        }
    }
    let bytes = writer.into_inner()?;
    std::fs::write(&args.out, bytes)
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    Ok(())
}

pub struct ExportDistArgs {
    pub scored: PathBuf,
    pub thresholds: Vec<(String, f64)>,
    pub score_field: String,
    pub out: PathBuf,
}

/// Plot data for the score-versus-length distribution: one row per
/// document plus one constant column per threshold line.
pub fn cmd_export_dist(args: &ExportDistArgs) -> Result<()> {
    let rows = read_scored_csv(&args.scored)?;
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "token_count".to_string(),
        args.score_field.clone(),
        "label".to_string(),
    ];
    for (name, _) in &args.thresholds {
        header.push(format!("thr_{name}"));
    }
    writer.write_record(&header)?;
    for row in &rows {
        let token_count = row.token_count.ok_or_else(|| Error::Parse {
            line: None,
            msg: format!("row {} has no token_count", row.doc_id),
        })?;
        let score = row
            .score(&args.score_field)
            .ok_or_else(|| Error::MissingScore {
                doc_id: row.doc_id.clone(),
                field: args.score_field.clone(),
            })?;
        let mut record = vec![
            token_count.to_string(),
            score.to_string(),
            row.label.to_string(),
        ];
        for (_, value) in &args.thresholds {
            record.push(value.to_string());
        }
        writer.write_record(&record)?;
    }
    let bytes = writer.into_inner()?;
    std::fs::write(&args.out, bytes)
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    Ok(())
}

pub fn dataset_clean(
    input: &Path,
    output: &Path,
    min_words: usize,
    ai_text_key: Option<String>,
) -> Result<()> {
    let schema = JsonlSchema { ai_text_key };
    let records = read_jsonl(input, &schema)?;
    let mut kept = Vec::new();
    let mut dropped = 0usize;
    for record in records {
        let text = match clean_text(&record.text, min_words) {
            CleanOutcome::Cleaned(t) => t,
            CleanOutcome::Rejected { .. } => {
                dropped += 1;
                continue;
            }
        };
        let ai_text = match &record.ai_text {
            None => None,
            Some(raw) => match clean_text(raw, min_words) {
                CleanOutcome::Cleaned(t) => Some(t),
                CleanOutcome::Rejected { .. } => {
                    dropped += 1;
                    continue;
                }
            },
        };
        kept.push(CorpusRecord {
            text,
            ai_text,
            ..record
        });
    }
    write_jsonl(&kept, output, &schema)?;
    eprintln!(
        "cleaned {} records ({dropped} dropped under {min_words} words) -> {}",
        kept.len(),
        output.display()
    );
    Ok(())
}

pub fn dataset_chunk(
    input: &Path,
    output: &Path,
    max_tokens: usize,
    min_tokens: usize,
) -> Result<()> {
    let schema = JsonlSchema::default();
    let tokenizer = WhitespaceTokenizer;
    let records = read_jsonl(input, &schema)?;
    let mut out = Vec::new();
    let mut skipped = 0usize;
    for record in records {
        use binoscope_core::corpus::CorpusTokenizer;
        if tokenizer.token_count(&record.text)? < min_tokens {
            skipped += 1;
            continue;
        }
        for chunk in chunk_document(&record.text, &tokenizer, max_tokens, min_tokens)? {
            out.push(CorpusRecord {
                text: chunk,
                ..Default::default()
            });
        }
    }
    write_jsonl(&out, output, &schema)?;
    eprintln!(
        "chunked into {} documents ({skipped} inputs skipped under {min_tokens} tokens) -> {}",
        out.len(),
        output.display()
    );
    Ok(())
}

pub fn dataset_prompts(input: &Path, output: &Path, n_tokens: usize) -> Result<()> {
    let schema = JsonlSchema::default();
    let tokenizer = WhitespaceTokenizer;
    let records = read_jsonl(input, &schema)?;
    let mut out = Vec::new();
    let mut skipped = 0usize;
    for record in records {
        match make_prompt(&record.text, &tokenizer, n_tokens) {
            Ok(prompt) => out.push(CorpusRecord {
                prompt: Some(prompt),
                ..record
            }),
            Err(Error::TextTooShort { .. }) => skipped += 1,
            Err(e) => return Err(e.into()),
        }
    }
    write_jsonl(&out, output, &schema)?;
    eprintln!(
        "prompted {} records ({skipped} skipped under {n_tokens} tokens) -> {}",
        out.len(),
        output.display()
    );
    Ok(())
}

pub fn dataset_stats(input: &Path, ai_text_key: Option<String>) -> Result<()> {
    let schema = JsonlSchema { ai_text_key };
    let records = read_jsonl(input, &schema)?;
    let stats = corpus_stats(&records, &WhitespaceTokenizer)?;
    let mut json = serde_json::to_string_pretty(&stats)?;
    json.push('\n');
    print!("{json}");
    Ok(())
}

pub fn lm_train(corpus: &Path, order: usize, smoothing_k: f64, out: &Path) -> Result<()> {
    let text = std::fs::read_to_string(corpus)
        .with_context(|| format!("cannot read {}", corpus.display()))?;
    let lm = ReferenceLM::train(&text, order, smoothing_k)?;
    std::fs::write(out, lm.to_json()?)
        .with_context(|| format!("cannot write {}", out.display()))?;
    eprintln!(
        "trained order-{order} model (k = {smoothing_k}, V = {}) -> {}",
        lm.vocab_size(),
        out.display()
    );
    Ok(())
}

pub fn lm_sample(model: &Path, length: usize, seed: u64, count: usize) -> Result<()> {
    let lm = ReferenceLM::from_json(
        &std::fs::read_to_string(model)
            .with_context(|| format!("cannot read {}", model.display()))?,
    )?;
    let stdout = std::io::stdout();
    let mut handle = stdout.lock();
    for i in 0..count {
        let tokens = lm.sample(length, seed.wrapping_add(i as u64))?;
        let text = lm.vocab().detokenize(&tokens)?;
        writeln!(handle, "{text}")?;
    }
    Ok(())
}

/// Parses a comma-separated detector list; `all` selects every baseline.
pub fn parse_baselines(s: &str) -> Result<Vec<Detector>> {
    if s.trim() == "all" {
        return Ok(Detector::ALL.to_vec());
    }
    s.split(',')
        .map(|p| Detector::parse(p).map_err(Into::into))
        .collect()
}

/// Parses a comma-separated method list.
pub fn parse_methods(s: &str) -> Result<Vec<Method>> {
    s.split(',')
        .map(|p| Method::parse(p).map_err(Into::into))
        .collect()
}
