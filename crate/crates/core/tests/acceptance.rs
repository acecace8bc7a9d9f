//! Acceptance suite. Each test checks one release criterion at its stated
//! tolerance and prints a PASS line; run with `--nocapture` to see them.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use binoscope_core::backend::ngram::{NgramBackend, ReferenceLM};
use binoscope_core::baselines::{avg_entropy, avg_log_likelihood, avg_log_rank, avg_rank};
use binoscope_core::corpus::{
    chunk_document, clean_text, parse_record, record_to_json, CleanOutcome, CorpusRecord,
    JsonlSchema, WhitespaceTokenizer,
};
use binoscope_core::matrix::LogProbMatrix;
use binoscope_core::report::{classification_report, ConfusionMatrix};
use binoscope_core::roc::{
    auroc, build_roc, closest_point_threshold, tpr_at_fpr_threshold, youden_threshold, Direction,
    LabeledScore, RocCurve,
};
use binoscope_core::scoring::{
    binoculars_score, cross_log_perplexity, log_perplexity, score_document, Label, ScoreOptions,
};
use binoscope_core::synth::{generate_corpus, split_documents, ChainSpec};
use binoscope_core::tokens::TokenSequence;

fn random_probability_rows(rng: &mut ChaCha8Rng, l: usize, v: usize) -> Vec<Vec<f64>> {
    (0..l)
        .map(|_| {
            let raw: Vec<f64> = (0..v).map(|_| rng.gen::<f64>() + 1e-3).collect();
            let sum: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / sum).collect()
        })
        .collect()
}

fn random_matrix(rng: &mut ChaCha8Rng, l: usize, v: usize) -> LogProbMatrix {
    LogProbMatrix::from_probability_rows(random_probability_rows(rng, l, v)).unwrap()
}

fn random_tokens(rng: &mut ChaCha8Rng, l: usize, v: usize) -> TokenSequence {
    TokenSequence::new((0..l).map(|_| rng.gen_range(0..v as u32)).collect()).unwrap()
}

/// Criterion 1: the direct log-PPL route equals the empirical one-hot
/// cross-entropy route within 1e-12 on 500 random pairs, in under 5 s.
#[test]
fn cross_entropy_identity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA1);
    for _ in 0..500 {
        let l = rng.gen_range(1..=64);
        let v = rng.gen_range(2..=128);
        let m = random_matrix(&mut rng, l, v);
        let tokens = random_tokens(&mut rng, l, v);

        let direct = log_perplexity(&m, &tokens).unwrap();

        // Independent route: cross-entropy against the one-hot empirical
        // distribution at every position.
        let mut total = 0.0;
        for (i, &id) in tokens.ids().iter().enumerate() {
            let mut empirical = vec![0.0; v];
            empirical[id as usize] = 1.0;
            let mut h = 0.0;
            for (j, p) in empirical.iter().enumerate() {
                h -= p * m.logprob(i, j as u32);
            }
            total += h;
        }
        let empirical_route = total / l as f64;

        assert!(
            (direct - empirical_route).abs() <= 1e-12,
            "direct {direct} vs empirical {empirical_route}"
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!("ACCEPTANCE cross_entropy_identity: PASS ({elapsed:?} for 500 pairs)");
}

/// Criterion 2: X-PPL(M1, M2) is bounded below by the mean row entropy of
/// M1, with equality within 1e-9 when M2 = M1. 500 pairs, under 5 s.
#[test]
fn gibbs_bound() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xB2);
    for round in 0..500 {
        let l = rng.gen_range(1..=64);
        let v = rng.gen_range(2..=128);
        let m1 = random_matrix(&mut rng, l, v);
        let mean_entropy = (0..l).map(|i| m1.row_entropy(i)).sum::<f64>() / l as f64;

        if round % 2 == 0 {
            let m2 = random_matrix(&mut rng, l, v);
            let x = cross_log_perplexity(&m1, &m2).unwrap();
            assert!(
                x >= mean_entropy - 1e-9,
                "x_ppl {x} below entropy {mean_entropy}"
            );
        } else {
            let x = cross_log_perplexity(&m1, &m1).unwrap();
            assert!(
                (x - mean_entropy).abs() <= 1e-9,
                "self x_ppl {x} vs entropy {mean_entropy}"
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!("ACCEPTANCE gibbs_bound: PASS ({elapsed:?} for 500 pairs)");
}

/// Criterion 3: both-uniform matrices give a Binoculars score of exactly
/// 1 within 1e-12 for any L and V up to 1024.
#[test]
fn uniform_fixed_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    let shapes = [
        (1usize, 2usize),
        (3, 4),
        (17, 128),
        (5, 1024),
        (64, 1024),
        (200, 7),
        (111, 333),
    ];
    for (l, v) in shapes {
        let m = LogProbMatrix::uniform(l, v);
        let tokens = random_tokens(&mut rng, l, v);
        let b = binoculars_score(&m, &m, &tokens).unwrap();
        assert!((b - 1.0).abs() <= 1e-12, "B = {b} for L={l} V={v}");
    }
    println!("ACCEPTANCE uniform_fixed_point: PASS ({} shapes)", shapes.len());
}

fn random_labeled_set(rng: &mut ChaCha8Rng, n_max: usize) -> Vec<LabeledScore> {
    loop {
        let n = rng.gen_range(2..=n_max);
        let set: Vec<LabeledScore> = (0..n)
            .map(|_| LabeledScore {
                // A coarse grid in [0, 1] so duplicated scores are common.
                score: (rng.gen_range(0..=20) as f64) * 0.05,
                label: if rng.gen_bool(0.5) {
                    Label::Ai
                } else {
                    Label::Human
                },
            })
            .collect();
        let pos = set.iter().filter(|s| s.label == Label::Ai).count();
        if pos > 0 && pos < set.len() {
            return set;
        }
    }
}

/// Probability that a random AI document scores on the AI side of a
/// random human document, ties counted one half.
fn pairwise_auc(samples: &[LabeledScore], direction: Direction) -> f64 {
    let ai: Vec<f64> = samples
        .iter()
        .filter(|s| s.label == Label::Ai)
        .map(|s| s.score)
        .collect();
    let human: Vec<f64> = samples
        .iter()
        .filter(|s| s.label == Label::Human)
        .map(|s| s.score)
        .collect();
    let mut total = 0.0;
    for &a in &ai {
        for &h in &human {
            let correct = match direction {
                Direction::AiLow => a < h,
                Direction::AiHigh => a > h,
            };
            if correct {
                total += 1.0;
            } else if a == h {
                total += 0.5;
            }
        }
    }
    total / (ai.len() * human.len()) as f64
}

/// Criterion 4: trapezoidal AUROC equals the O(n^2) pairwise probability
/// within 1e-9 on 200 random sets with duplicated scores.
#[test]
fn auroc_pairwise_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD4);
    for round in 0..200 {
        let samples = random_labeled_set(&mut rng, 50);
        let direction = if round % 2 == 0 {
            Direction::AiLow
        } else {
            Direction::AiHigh
        };
        let curve = build_roc(&samples, direction).unwrap();
        let got = auroc(&curve);
        let want = pairwise_auc(&samples, direction);
        assert!((got - want).abs() <= 1e-9, "trapezoid {got} vs pairwise {want}");
    }
    println!("ACCEPTANCE auroc_pairwise_oracle: PASS (200 sets)");
}

/// Candidate thresholds recomputed from raw scores: sentinels plus
/// midpoints between consecutive distinct values, in sweep order.
fn oracle_candidates(samples: &[LabeledScore], direction: Direction) -> Vec<f64> {
    let mut scores: Vec<f64> = samples.iter().map(|s| s.score).collect();
    scores.sort_by(f64::total_cmp);
    scores.dedup();
    let mut candidates = Vec::new();
    match direction {
        Direction::AiLow => {
            candidates.push(scores[0] - 1.0);
            for w in scores.windows(2) {
                candidates.push((w[0] + w[1]) / 2.0);
            }
            candidates.push(scores[scores.len() - 1] + 1.0);
        }
        Direction::AiHigh => {
            candidates.push(scores[scores.len() - 1] + 1.0);
            for w in scores.windows(2).rev() {
                candidates.push((w[0] + w[1]) / 2.0);
            }
            candidates.push(scores[0] - 1.0);
        }
    }
    candidates
}

fn rates_at(samples: &[LabeledScore], t: f64, direction: Direction) -> (f64, f64) {
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut pos = 0usize;
    let mut neg = 0usize;
    for s in samples {
        let ai_side = match direction {
            Direction::AiLow => s.score <= t,
            Direction::AiHigh => s.score >= t,
        };
        match s.label {
            Label::Ai => {
                pos += 1;
                if ai_side {
                    tp += 1;
                }
            }
            Label::Human => {
                neg += 1;
                if ai_side {
                    fp += 1;
                }
            }
            Label::Unknown => {}
        }
    }
    (fp as f64 / neg as f64, tp as f64 / pos as f64)
}

/// Criterion 5: each selector matches an exhaustive scan over all
/// candidate thresholds, for epsilon in {0, 0.0006, 0.05, 1}. 200 sets.
#[test]
fn threshold_selector_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE5);
    let epsilons = [0.0, 0.0006, 0.05, 1.0];
    for round in 0..200 {
        let samples = random_labeled_set(&mut rng, 50);
        let direction = if round % 2 == 0 {
            Direction::AiLow
        } else {
            Direction::AiHigh
        };
        let curve = build_roc(&samples, direction).unwrap();
        let candidates = oracle_candidates(&samples, direction);

        // Youden by exhaustive scan; ties keep the lowest FPR, then the
        // earlier (more conservative) candidate.
        let mut best_t = candidates[0];
        let (mut best_fpr, mut best_tpr) = rates_at(&samples, best_t, direction);
        for &t in &candidates[1..] {
            let (fpr, tpr) = rates_at(&samples, t, direction);
            let j = tpr - fpr;
            let best_j = best_tpr - best_fpr;
            if j > best_j || (j == best_j && fpr < best_fpr) {
                best_t = t;
                best_fpr = fpr;
                best_tpr = tpr;
            }
        }
        let got = youden_threshold(&curve);
        assert_eq!((got.fpr, got.tpr), (best_fpr, best_tpr), "youden point");
        assert!(
            (got.objective - (best_tpr - best_fpr)).abs() <= 1e-12,
            "youden objective"
        );
        assert_eq!(
            rates_at(&samples, got.t_star, direction),
            rates_at(&samples, best_t, direction),
            "youden threshold classifies differently"
        );

        // Closest point by exhaustive scan.
        let dist = |fpr: f64, tpr: f64| (fpr * fpr + (1.0 - tpr) * (1.0 - tpr)).sqrt();
        let mut best_t = candidates[0];
        let (mut best_fpr, mut best_tpr) = rates_at(&samples, best_t, direction);
        for &t in &candidates[1..] {
            let (fpr, tpr) = rates_at(&samples, t, direction);
            if dist(fpr, tpr) < dist(best_fpr, best_tpr)
                || (dist(fpr, tpr) == dist(best_fpr, best_tpr) && fpr < best_fpr)
            {
                best_t = t;
                best_fpr = fpr;
                best_tpr = tpr;
            }
        }
        let got = closest_point_threshold(&curve);
        assert_eq!((got.fpr, got.tpr), (best_fpr, best_tpr), "closest point");
        assert!((got.objective - dist(best_fpr, best_tpr)).abs() <= 1e-12);
        assert_eq!(
            rates_at(&samples, got.t_star, direction),
            rates_at(&samples, best_t, direction)
        );

        // Bounded TPR by exhaustive scan.
        for &eps in &epsilons {
            let mut best: Option<(f64, f64, f64)> = None; // (t, fpr, tpr)
            for &t in &candidates {
                let (fpr, tpr) = rates_at(&samples, t, direction);
                if fpr > eps {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((_, bf, bt)) => tpr > bt || (tpr == bt && fpr < bf),
                };
                if better {
                    best = Some((t, fpr, tpr));
                }
            }
            let (bt, bf, btpr) = best.expect("sentinel always feasible");
            let got = tpr_at_fpr_threshold(&curve, eps).unwrap();
            assert_eq!((got.fpr, got.tpr), (bf, btpr), "tpr@fpr<= {eps}");
            assert!((got.objective - btpr).abs() <= 1e-12);
            assert_eq!(
                rates_at(&samples, got.t_star, direction),
                rates_at(&samples, bt, direction)
            );
            if eps >= 1.0 {
                assert_eq!(got.tpr, 1.0, "epsilon = 1 must reach full TPR");
            }
        }
    }
    println!("ACCEPTANCE threshold_selector_oracle: PASS (200 sets x 4 epsilons)");
}

/// Criterion 6: AUROC and all selected operating points are invariant
/// under strictly increasing score transforms; the transformed threshold
/// classifies the transformed scores identically.
#[test]
fn monotone_transform_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xF6);
    let transforms: Vec<(&str, Box<dyn Fn(f64, f64, f64) -> f64>)> = vec![
        ("affine", Box::new(|x, a, b| a * x + b)),
        ("cubic", Box::new(|x, a, _| a * (x * x * x + x))),
        ("exp", Box::new(|x, a, _| (a * x).exp())),
        ("atan", Box::new(|x, a, b| 2.0 * (a * x + b).atan())),
    ];
    for _ in 0..20 {
        let samples = random_labeled_set(&mut rng, 50);
        let curve = build_roc(&samples, Direction::AiLow).unwrap();
        let base_auc = auroc(&curve);
        let base_points = [
            youden_threshold(&curve),
            closest_point_threshold(&curve),
            tpr_at_fpr_threshold(&curve, 0.0006).unwrap(),
            tpr_at_fpr_threshold(&curve, 0.05).unwrap(),
        ];
        for round in 0..20 {
            let (_, f) = &transforms[round % transforms.len()];
            let a = rng.gen_range(0.5..3.0);
            let b = rng.gen_range(-2.0..2.0);
            let mapped: Vec<LabeledScore> = samples
                .iter()
                .map(|s| LabeledScore {
                    score: f(s.score, a, b),
                    label: s.label,
                })
                .collect();
            let mapped_curve = build_roc(&mapped, Direction::AiLow).unwrap();
            assert!(
                (auroc(&mapped_curve) - base_auc).abs() <= 1e-9,
                "AUROC moved under a monotone transform"
            );
            let mapped_points = [
                youden_threshold(&mapped_curve),
                closest_point_threshold(&mapped_curve),
                tpr_at_fpr_threshold(&mapped_curve, 0.0006).unwrap(),
                tpr_at_fpr_threshold(&mapped_curve, 0.05).unwrap(),
            ];
            for (orig, mapped_choice) in base_points.iter().zip(&mapped_points) {
                assert_eq!(
                    (orig.fpr, orig.tpr),
                    (mapped_choice.fpr, mapped_choice.tpr),
                    "operating point moved"
                );
                // The transformed threshold classifies each transformed
                // score exactly as the original threshold classified the
                // original score.
                for s in &samples {
                    let before = s.score <= orig.t_star;
                    let after = f(s.score, a, b) <= mapped_choice.t_star;
                    assert_eq!(before, after, "classification flipped");
                }
            }
        }
    }
    println!("ACCEPTANCE monotone_transform_invariance: PASS (20 sets x 20 transforms)");
}

/// Criterion 7: desk-scale separation. Observer = order-3 reference LM on
/// corpus A; performer = same counts with doubled smoothing. 200
/// performer samples (AI) vs 200 held-out documents from a disjoint
/// corpus B (human proxy), 100 tokens each: Binoculars AUROC >= 0.85 and
/// the AI mean falls below the human mean, in under 60 s.
/// (First run observed AUROC = 1.000, AI mean 1.030, human mean 1.142.)
#[test]
fn desk_scale_separation() {
    let start = Instant::now();
    let corpus_a = generate_corpus(&ChainSpec::corpus_a(), 20_000, 11);
    let observer_lm = ReferenceLM::train(&corpus_a, 3, 0.5).unwrap();
    let performer_lm = observer_lm.with_smoothing(1.0).unwrap();
    assert_eq!(performer_lm.smoothing_k(), 2.0 * observer_lm.smoothing_k());
    let observer = NgramBackend::new(observer_lm);
    let performer = NgramBackend::new(performer_lm);
    let opts = ScoreOptions {
        min_tokens: 50,
        baselines: Vec::new(),
    };

    let mut samples = Vec::new();
    let mut ai_sum = 0.0;
    for i in 0..200u64 {
        let tokens = performer.lm().sample(100, 1_000 + i).unwrap();
        let text = performer.lm().vocab().detokenize(&tokens).unwrap();
        let doc = score_document(
            &observer,
            &performer,
            &format!("ai-{i:03}"),
            &text,
            Label::Ai,
            &opts,
        )
        .unwrap();
        ai_sum += doc.binoculars;
        samples.push(LabeledScore {
            score: doc.binoculars,
            label: Label::Ai,
        });
    }

    let corpus_b = generate_corpus(&ChainSpec::corpus_b(), 200 * 100 + 50, 22);
    let mut human_sum = 0.0;
    let human_docs = split_documents(&corpus_b, 100);
    assert!(human_docs.len() >= 200);
    for (i, text) in human_docs.into_iter().take(200).enumerate() {
        let doc = score_document(
            &observer,
            &performer,
            &format!("hum-{i:03}"),
            &text,
            Label::Human,
            &opts,
        )
        .unwrap();
        human_sum += doc.binoculars;
        samples.push(LabeledScore {
            score: doc.binoculars,
            label: Label::Human,
        });
    }

    let curve = build_roc(&samples, Direction::AiLow).unwrap();
    let auc = auroc(&curve);
    let ai_mean = ai_sum / 200.0;
    let human_mean = human_sum / 200.0;
    let elapsed = start.elapsed();

    assert!(auc >= 0.85, "AUROC {auc} below the 0.85 bound");
    assert!(
        ai_mean < human_mean,
        "AI mean {ai_mean} not below human mean {human_mean}"
    );
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!(
        "ACCEPTANCE desk_scale_separation: PASS (AUROC {auc:.4}, AI mean {ai_mean:.4} < human mean {human_mean:.4}, {elapsed:?})"
    );
}

/// Criterion 8: avg_log_likelihood equals the negated log-perplexity to
/// 1e-12, and rank / log-rank / entropy stay inside their ranges, on 500
/// random matrices.
#[test]
fn baseline_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x17);
    for _ in 0..500 {
        let l = rng.gen_range(1..=32);
        let v = rng.gen_range(2..=64);
        let m = random_matrix(&mut rng, l, v);
        let tokens = random_tokens(&mut rng, l, v);

        let ll = avg_log_likelihood(&m, &tokens).unwrap();
        let ppl = log_perplexity(&m, &tokens).unwrap();
        assert!((ll + ppl).abs() <= 1e-12, "likelihood {ll} vs -logppl {}", -ppl);

        let rank = avg_rank(&m, &tokens).unwrap();
        assert!((1.0..=v as f64).contains(&rank), "rank {rank} outside [1, {v}]");

        let logrank = avg_log_rank(&m, &tokens).unwrap();
        assert!(
            (-1e-12..=(v as f64).ln() + 1e-12).contains(&logrank),
            "logrank {logrank} outside [0, ln {v}]"
        );

        let entropy = avg_entropy(&m).unwrap();
        assert!(
            (-1e-12..=(v as f64).ln() + 1e-12).contains(&entropy),
            "entropy {entropy} outside [0, ln {v}]"
        );
    }
    println!("ACCEPTANCE baseline_consistency: PASS (500 matrices)");
}

/// Criterion 9: classification reports agree with independent arithmetic
/// on 100 random confusion matrices, and the rendered layout carries the
/// Human / AI / accuracy / macro avg / weighted avg rows.
#[test]
fn metrics_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x29);
    for _ in 0..100 {
        let tp = rng.gen_range(0..200u32) as usize;
        let fn_ = rng.gen_range(0..200u32) as usize;
        let fp = rng.gen_range(0..200u32) as usize;
        let tn = rng.gen_range(0..200u32) as usize;
        if tp + fn_ + fp + tn == 0 {
            continue;
        }
        let cm = ConfusionMatrix::new(tp, fn_, fp, tn);
        let report = classification_report(&cm).unwrap();

        let div = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let f1 = |p: f64, r: f64| if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };

        let ai_p = div(tp, tp + fp);
        let ai_r = div(tp, tp + fn_);
        let hu_p = div(tn, tn + fn_);
        let hu_r = div(tn, tn + fp);
        let total = (tp + fn_ + fp + tn) as f64;

        assert_eq!(report.ai.precision, ai_p);
        assert_eq!(report.ai.recall, ai_r);
        assert_eq!(report.human.precision, hu_p);
        assert_eq!(report.human.recall, hu_r);
        assert_eq!(report.ai.f1, f1(ai_p, ai_r));
        assert_eq!(report.human.f1, f1(hu_p, hu_r));
        assert_eq!(report.accuracy, (tp + tn) as f64 / total);
        assert_eq!(report.macro_avg.f1, (f1(ai_p, ai_r) + f1(hu_p, hu_r)) / 2.0);
        let weighted_f1 = (f1(hu_p, hu_r) * (tn + fp) as f64 + f1(ai_p, ai_r) * (tp + fn_) as f64)
            / total;
        assert!((report.weighted_avg.f1 - weighted_f1).abs() <= 1e-15);
    }
    let rendered = classification_report(&ConfusionMatrix::new(2, 1, 1, 2))
        .unwrap()
        .render();
    for row in ["Human", "AI", "accuracy", "macro avg", "weighted avg"] {
        assert!(rendered.contains(row), "missing {row} in rendered report");
    }
    println!("ACCEPTANCE metrics_oracle: PASS (100 matrices + layout)");
}

fn random_text(rng: &mut ChaCha8Rng, words: usize) -> String {
    let inventory = [
        "bài", "báo", "điện", "tử", "việt", "nam", "news", "article", "văn", "học", "w1", "w2",
    ];
    (0..words)
        .map(|_| inventory[rng.gen_range(0..inventory.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

/// Criterion 10: pipeline round-trips. JSONL write-then-read is identity
/// on 1000 synthetic records; cleaning is idempotent; every chunk lands
/// in [min_tokens, max_tokens).
#[test]
fn pipeline_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x3B);

    // JSONL identity through a real file.
    let schema = JsonlSchema::with_key("sail-Sailor2-8B-Chat-generated_text");
    let records: Vec<CorpusRecord> = (0..1000)
        .map(|i| {
            let mut extra = serde_json::Map::new();
            if i % 3 == 0 {
                extra.insert("source".into(), serde_json::json!(format!("doc-{i}")));
            }
            let text_len = rng.gen_range(5..40);
            let text = random_text(&mut rng, text_len);
            let prompt = if i % 2 == 0 {
                Some(random_text(&mut rng, 5))
            } else {
                None
            };
            let ai_len = rng.gen_range(5..40);
            let ai_text = Some(random_text(&mut rng, ai_len));
            CorpusRecord {
                text,
                prompt,
                ai_text,
                gen_meta: (i % 4 == 0).then(|| serde_json::json!({"temperature": 0.7, "i": i})),
                extra,
            }
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("round_trip.jsonl");
    binoscope_core::corpus::write_jsonl(&records, &path, &schema).unwrap();
    let back = binoscope_core::corpus::read_jsonl(&path, &schema).unwrap();
    assert_eq!(records, back, "JSONL round trip must be identity");

    // Byte-identical text fields through the line representation.
    for record in records.iter().take(50) {
        let line = record_to_json(record, &schema).unwrap();
        let reparsed = parse_record(&line, &schema, 1).unwrap();
        assert_eq!(record.text.as_bytes(), reparsed.text.as_bytes());
    }

    // Cleaning idempotence on messy documents.
    for i in 0..100 {
        let mut raw = random_text(&mut rng, 60 + i % 30);
        raw = format!("<p>{raw}</p> xem https://example.vn/{i} &amp; c\u{0007}uối");
        let once = match clean_text(&raw, 10) {
            CleanOutcome::Cleaned(s) => s,
            CleanOutcome::Rejected { .. } => panic!("doc {i} rejected"),
        };
        match clean_text(&once, 10) {
            CleanOutcome::Cleaned(twice) => assert_eq!(once, twice, "doc {i} not idempotent"),
            CleanOutcome::Rejected { .. } => panic!("doc {i} rejected on second pass"),
        }
    }

    // Chunker bounds on random documents.
    let tok = WhitespaceTokenizer;
    for i in 0..100 {
        let n_words = rng.gen_range(512..3000);
        let mut words = Vec::with_capacity(n_words);
        for w in 0..n_words {
            let terminal = rng.gen_range(0..14) == 0;
            words.push(if terminal {
                format!("t{w}.")
            } else {
                format!("t{w}")
            });
        }
        let text = words.join(" ");
        let chunks = chunk_document(&text, &tok, 512, 50).unwrap();
        for chunk in &chunks {
            let n = chunk.split_whitespace().count();
            assert!(
                (50..512).contains(&n),
                "doc {i}: chunk of {n} tokens violates [50, 512)"
            );
        }
        assert_eq!(chunks.join(" "), text, "doc {i}: chunks do not rebuild the text");
    }

    println!("ACCEPTANCE pipeline_round_trips: PASS (1000 records, 100 cleanings, 100 chunkings)");
}

/// Consistency between the ROC curve and the confusion matrix: the TPR
/// recomputed from classifications at a curve threshold equals the
/// curve's TPR at that point within 1e-12.
#[test]
fn roc_report_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4D);
    for _ in 0..50 {
        let samples = random_labeled_set(&mut rng, 40);
        let curve: RocCurve = build_roc(&samples, Direction::AiLow).unwrap();
        for point in &curve.points {
            let predictions: Vec<Label> = samples
                .iter()
                .map(|s| binoscope_core::report::classify(s.score, point.threshold, Direction::AiLow))
                .collect();
            let truth: Vec<Label> = samples.iter().map(|s| s.label).collect();
            let cm = ConfusionMatrix::from_labels(&predictions, &truth).unwrap();
            assert!((cm.tpr() - point.tpr).abs() <= 1e-12);
            assert!((cm.fpr() - point.fpr).abs() <= 1e-12);
        }
    }
    println!("ACCEPTANCE roc_report_consistency: PASS (50 sets)");
}
