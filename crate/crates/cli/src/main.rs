//! binoscope: zero-shot LLM-text detection over observer/performer model
//! pairs, with ROC threshold calibration and evaluation reporting.
//!
//! Exit status: 0 success, 1 usage error, 2 data error, 3 backend or
//! remote failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use binoscope_core::error::Error as CoreError;
use binoscope_core::roc::{Direction, Method};

use commands::*;
use config::{parse_bounds, parse_threshold_flag, RunConfig, DEFAULT_SWEEP_BOUNDS};

#[derive(Parser)]
#[command(
    name = "binoscope",
    version,
    about = "Detect machine-generated text with the Binoculars perplexity ratio"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a JSONL corpus against an observer/performer pair into a CSV.
    Score {
        /// Run configuration (backends, length policy, baselines).
        #[arg(long)]
        config: PathBuf,
        /// Corpus JSONL; overrides the config's `corpus` path.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// JSONL key holding generated text; overrides the config.
        #[arg(long)]
        ai_text_key: Option<String>,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated baselines (likelihood,rank,logrank,entropy or `all`).
        #[arg(long)]
        baselines: Option<String>,
    },
    /// Calibrate global thresholds from a scored CSV.
    Calibrate {
        #[arg(long)]
        scored: PathBuf,
        /// Optional run config supplying defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Score column to calibrate on.
        #[arg(long)]
        score_field: Option<String>,
        /// ai-low (AI when score <= t) or ai-high; defaults per field.
        #[arg(long)]
        direction: Option<String>,
        /// Comma-separated methods: youden,closest,tpr_at_fpr.
        #[arg(long)]
        methods: Option<String>,
        /// FPR ceiling for tpr_at_fpr.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Also write the ROC curve (threshold,fpr,tpr CSV) here.
        #[arg(long)]
        roc_out: Option<PathBuf>,
        /// Report JSON path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify a scored CSV at one or more thresholds and report.
    Evaluate {
        #[arg(long)]
        scored: PathBuf,
        /// Explicit cutoff as name=value; repeatable.
        #[arg(long = "threshold")]
        thresholds: Vec<String>,
        /// Take thresholds from a calibration report instead.
        #[arg(long)]
        from_report: Option<PathBuf>,
        /// Optional run config supplying defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        score_field: Option<String>,
        #[arg(long)]
        direction: Option<String>,
        /// Write the JSON report here as well.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Suppress the plain-text tables.
        #[arg(long)]
        quiet: bool,
    },
    /// Detection quality versus minimum document length.
    Sweep {
        #[arg(long)]
        scored: PathBuf,
        #[arg(long = "threshold")]
        thresholds: Vec<String>,
        #[arg(long)]
        from_report: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated strictly increasing token bounds.
        #[arg(long)]
        bounds: Option<String>,
        #[arg(long)]
        score_field: Option<String>,
        #[arg(long)]
        direction: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export score-versus-length plot data with threshold lines.
    #[command(name = "export-dist")]
    ExportDist {
        #[arg(long)]
        scored: PathBuf,
        #[arg(long = "threshold")]
        thresholds: Vec<String>,
        #[arg(long)]
        from_report: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        score_field: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Corpus pipeline: clean, chunk, prompts, stats.
    Dataset {
        #[command(subcommand)]
        command: DatasetCommand,
    },
    /// Built-in n-gram language models: train, sample.
    Lm {
        #[command(subcommand)]
        command: LmCommand,
    },
}

#[derive(Subcommand)]
enum DatasetCommand {
    /// Strip markup, normalize whitespace, drop short documents.
    Clean {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = binoscope_core::corpus::DEFAULT_MIN_WORDS)]
        min_words: usize,
        #[arg(long)]
        ai_text_key: Option<String>,
    },
    /// Split documents into bounded-size chunks at sentence boundaries.
    Chunk {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = binoscope_core::corpus::DEFAULT_MAX_CHUNK_TOKENS)]
        max_tokens: usize,
        #[arg(long, default_value_t = 50)]
        min_tokens: usize,
    },
    /// Attach the first-N-token prompt to every record.
    Prompts {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = binoscope_core::corpus::DEFAULT_PROMPT_TOKENS)]
        tokens: usize,
    },
    /// Document counts and median tokens per class.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        ai_text_key: Option<String>,
    },
}

#[derive(Subcommand)]
enum LmCommand {
    /// Train an add-k smoothed n-gram model from a text corpus.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = binoscope_core::backend::DEFAULT_NGRAM_ORDER)]
        order: usize,
        #[arg(long, default_value_t = binoscope_core::backend::DEFAULT_SMOOTHING_K)]
        smoothing_k: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample deterministic sequences from a trained model.
    Sample {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 100)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
}

fn resolve_score_field(flag: Option<String>, config: &RunConfig) -> String {
    flag.unwrap_or_else(|| config.score_field().to_string())
}

/// Flag wins, then the config, then the per-field convention.
fn resolve_direction(
    flag: Option<&str>,
    config: &RunConfig,
    field: &str,
) -> anyhow::Result<Direction> {
    match flag {
        Some(s) => Ok(Direction::parse(s)?),
        None => Ok(config
            .direction
            .unwrap_or_else(|| Direction::default_for_field(field))),
    }
}

fn parse_thresholds(flags: &[String]) -> anyhow::Result<Vec<(String, f64)>> {
    flags.iter().map(|s| parse_threshold_flag(s)).collect()
}

fn load_config(path: Option<&PathBuf>) -> anyhow::Result<RunConfig> {
    match path {
        Some(path) => RunConfig::load(path),
        None => Ok(RunConfig::default()),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Score {
            config,
            corpus,
            ai_text_key,
            out,
            baselines,
        } => {
            let mut run_config = RunConfig::load(&config)?;
            if ai_text_key.is_some() {
                run_config.ai_text_key = ai_text_key;
            }
            if let Some(list) = baselines {
                run_config.baselines = Some(parse_baselines(&list)?);
            }
            let corpus = corpus
                .or_else(|| run_config.corpus.clone())
                .ok_or_else(|| {
                    CoreError::InvalidConfig("no corpus given (flag or config)".into())
                })?;
            cmd_score(&ScoreArgs {
                config: run_config,
                corpus,
                out,
            })
        }
        Command::Calibrate {
            scored,
            config,
            score_field,
            direction,
            methods,
            epsilon,
            roc_out,
            out,
        } => {
            let run_config = load_config(config.as_ref())?;
            let score_field = resolve_score_field(score_field, &run_config);
            let direction = resolve_direction(direction.as_deref(), &run_config, &score_field)?;
            let methods: Vec<Method> = match methods {
                Some(list) => parse_methods(&list)?,
                None => run_config.methods.clone().unwrap_or_else(|| {
                    vec![Method::Youden, Method::Closest, Method::TprAtFpr]
                }),
            };
            let epsilon = epsilon.unwrap_or_else(|| run_config.epsilon());
            cmd_calibrate(&CalibrateArgs {
                scored,
                score_field,
                direction,
                methods,
                epsilon,
                roc_out,
                out,
            })
        }
        Command::Evaluate {
            scored,
            thresholds,
            from_report,
            config,
            score_field,
            direction,
            out,
            quiet,
        } => {
            let run_config = load_config(config.as_ref())?;
            let score_field = resolve_score_field(score_field, &run_config);
            let direction = resolve_direction(direction.as_deref(), &run_config, &score_field)?;
            let thresholds = resolve_thresholds(
                &parse_thresholds(&thresholds)?,
                from_report.as_deref(),
                &run_config,
            )?;
            cmd_evaluate(&EvaluateArgs {
                scored,
                thresholds,
                score_field,
                direction,
                out,
                quiet,
            })
        }
        Command::Sweep {
            scored,
            thresholds,
            from_report,
            config,
            bounds,
            score_field,
            direction,
            out,
        } => {
            let run_config = load_config(config.as_ref())?;
            let score_field = resolve_score_field(score_field, &run_config);
            let direction = resolve_direction(direction.as_deref(), &run_config, &score_field)?;
            let thresholds = resolve_thresholds(
                &parse_thresholds(&thresholds)?,
                from_report.as_deref(),
                &run_config,
            )?;
            let bounds = match bounds {
                Some(s) => parse_bounds(&s)?,
                None => DEFAULT_SWEEP_BOUNDS.to_vec(),
            };
            cmd_sweep(&SweepArgs {
                scored,
                thresholds,
                bounds,
                score_field,
                direction,
                out,
            })
        }
        Command::ExportDist {
            scored,
            thresholds,
            from_report,
            config,
            score_field,
            out,
        } => {
            let run_config = load_config(config.as_ref())?;
            let score_field = resolve_score_field(score_field, &run_config);
            let thresholds = resolve_thresholds(
                &parse_thresholds(&thresholds)?,
                from_report.as_deref(),
                &run_config,
            )?;
            cmd_export_dist(&ExportDistArgs {
                scored,
                thresholds,
                score_field,
                out,
            })
        }
        Command::Dataset { command } => match command {
            DatasetCommand::Clean {
                input,
                out,
                min_words,
                ai_text_key,
            } => dataset_clean(&input, &out, min_words, ai_text_key),
            DatasetCommand::Chunk {
                input,
                out,
                max_tokens,
                min_tokens,
            } => dataset_chunk(&input, &out, max_tokens, min_tokens),
            DatasetCommand::Prompts { input, out, tokens } => {
                dataset_prompts(&input, &out, tokens)
            }
            DatasetCommand::Stats { input, ai_text_key } => dataset_stats(&input, ai_text_key),
        },
        Command::Lm { command } => match command {
            LmCommand::Train {
                corpus,
                order,
                smoothing_k,
                out,
            } => lm_train(&corpus, order, smoothing_k, &out),
            LmCommand::Sample {
                model,
                length,
                seed,
                count,
            } => lm_sample(&model, length, seed, count),
        },
    }
}

/// 1 usage, 2 data, 3 backend/remote.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    if let Some(core) = err.downcast_ref::<CoreError>() {
        match core {
            CoreError::RemoteUnavailable { .. }
            | CoreError::AuthError(_)
            | CoreError::ContextOverflow { .. }
            | CoreError::UnknownBackend(_)
            | CoreError::TokenizeUnsupported { .. } => 3,
            CoreError::InvalidConfig(_) => 1,
            _ => 2,
        }
    } else {
        // Flag parsing, config validation, and similar usage problems.
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are not errors.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
