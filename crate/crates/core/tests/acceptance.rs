//! Acceptance criteria 1-10. Runs without the test harness and prints one
//! PASS/FAIL line per criterion; exits non-zero if any criterion fails.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use summary_loop::analysis::{copied_spans, rouge_l, rouge_n, rouge_scores};
use summary_loop::backends::{
    apply_policy_update, sequence_log_prob, ClozeModel, FrequencyBaselineCloze, NgramLm,
    NgramLmConfig, OracleCloze, PointerSummarizer, PointerSummarizerConfig, ShallowCloze,
    ShallowClozeConfig, SummaryOracleCloze,
};
use summary_loop::corpus::{write_records, CorpusRecord, Document, SummaryText, Vocab};
use summary_loop::coverage::{normalized_coverage, train_coverage, CoverageResult, CoverageScorer, CoverageTrainConfig};
use summary_loop::fluency::{calibrate_fluency, FluencyConfig};
use summary_loop::masking::{fit_tfidf, select_keywords, Masker};
use summary_loop::scoring::{detect_rails, FrameRule, FrameWindow, PenaltyStacking, Rail, SummaryScorer, Weights};
use summary_loop::synthetic::{generate, SyntheticConfig};
use summary_loop::training::{
    decode, prepare_documents, scst_loss, scst_step, train_loop, DecodeMode, MetricsRow, StepConfig,
    TrainConfig, TrainerState,
};

use common::*;

type Outcome = Result<String, String>;

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn normalization_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let texts = random_corpus(&mut rng, 100, 150);
    let (vocab, docs) = build_docs(&texts);
    let masker = Masker::new(fit_tfidf(&docs).unwrap(), 15);
    let mut trained = ShallowCloze::new(&vocab, &ShallowClozeConfig::default());
    train_coverage(&mut trained, &docs, &masker, &vocab, &CoverageTrainConfig { epochs: 2, ..Default::default() })
        .map_err(|e| e.to_string())?;
    let backends: Vec<Box<dyn ClozeModel>> = vec![
        Box::new(OracleCloze::new(&docs)),
        Box::new(SummaryOracleCloze::new(&docs, vocab.unk())),
        Box::new(FrequencyBaselineCloze::fit(&docs, &masker, &vocab)),
        Box::new(ShallowCloze::new(&vocab, &ShallowClozeConfig::default())),
        Box::new(trained),
    ];
    let mut failures = 0;
    for cloze in &backends {
        for doc in &docs {
            let masked = masker.mask(doc, &vocab);
            let r = normalized_coverage(&**cloze, doc, &masked, &SummaryText::empty(true)).map_err(|e| e.to_string())?;
            if r.normalized != 0.0 {
                failures += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    check(
        failures == 0 && elapsed < Duration::from_secs(10),
        format!("{} documents x {} backends, {failures} non-zero, {elapsed:.2?}", docs.len(), backends.len()),
    )
}

fn table_fixtures() -> Outcome {
    let rows = [(0.478, 0.144), (0.525, 0.191), (0.726, 0.392)];
    let errors: Vec<f64> = rows
        .iter()
        .map(|&(raw, expected)| (CoverageResult::from_raw(raw, 0.334).normalized - expected).abs())
        .collect();
    let worst = errors.iter().cloned().fold(0.0, f64::max);
    check(worst < 1e-3, format!("max deviation {worst:.1e} over 3 fixtures"))
}

fn tfidf_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut cases, mut matches) = (0, 0);
    for _ in 0..50 {
        let n_docs = rng.gen_range(1..=50);
        let vocab_size = rng.gen_range(2..=200);
        let texts = random_corpus(&mut rng, n_docs, vocab_size);
        let (_, docs) = build_docs(&texts);
        let model = fit_tfidf(&docs).map_err(|e| e.to_string())?;
        for (i, doc) in docs.iter().enumerate() {
            for k in [1, 5, 15] {
                cases += 1;
                if select_keywords(doc, &model, k) == brute_force_keywords(&texts, i, k) {
                    matches += 1;
                }
            }
        }
    }
    check(matches == cases, format!("{matches}/{cases} keyword sets equal over 50 corpora"))
}

fn fluency_endpoints() -> Outcome {
    let cfg = FluencyConfig::new(2.0, 6.0).map_err(|e| e.to_string())?;
    let exact = cfg.scale(2.0) == 1.0 && cfg.scale(6.0) == 0.0 && cfg.scale(4.0) == 0.5;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut violations = 0;
    for _ in 0..1000 {
        let (a, b): (f64, f64) = (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0));
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if cfg.scale(lo) < cfg.scale(hi) {
            violations += 1;
        }
    }
    check(
        exact && violations == 0,
        format!("endpoints and midpoint exact: {exact}; {violations} monotonicity violations in 1000 pairs"),
    )
}

fn summary(words: Vec<String>, ended: bool) -> SummaryText {
    SummaryText { tokens: vec![0; words.len()], words, ended }
}

fn distinct_words(rng: &mut ChaCha8Rng, len: std::ops::Range<usize>) -> Vec<String> {
    let n = rng.gen_range(len);
    let base = rng.gen_range(0..1000);
    (0..n).map(|i| format!("w{}", base + i)).collect()
}

/// A full 100-entry window whose position 0 holds "frame" in `hits` entries.
fn window_with(hits: usize, rng: &mut ChaCha8Rng) -> FrameWindow {
    let mut w = FrameWindow::new(100, 0.5);
    for i in 0..100 {
        let mut words = distinct_words(rng, 1..8);
        words.insert(0, if i < hits { "frame".into() } else { format!("u{i}") });
        w.push(words);
    }
    w
}

fn guard_rails() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let has = |s: &SummaryText, w: Option<&FrameWindow>, r: Rail| detect_rails(s, w, FrameRule::Window).contains(&r);
    let mut errors = Vec::new();
    for i in 0..20 {
        let mut pos = distinct_words(&mut rng, 3..8);
        let tri = pos[..3].to_vec();
        pos.extend(distinct_words(&mut rng, 0..3).into_iter().map(|w| format!("x{w}")));
        pos.extend(tri);
        if !has(&summary(pos, true), None, Rail::Repetition) {
            errors.push(format!("repetition positive {i}"));
        }
        let neg = distinct_words(&mut rng, 0..12);
        if has(&summary(neg, true), None, Rail::Repetition) {
            errors.push(format!("repetition negative {i}"));
        }
        let words = distinct_words(&mut rng, 0..10);
        if !has(&summary(words.clone(), false), None, Rail::NoEnd) {
            errors.push(format!("no_end positive {i}"));
        }
        if has(&summary(words.clone(), true), None, Rail::NoEnd) {
            errors.push(format!("no_end negative {i}"));
        }
        let hits = rng.gen_range(51..=100);
        if !has(&summary(words.clone(), true), Some(&window_with(hits, &mut rng)), Rail::FrameFilling) {
            errors.push(format!("frame positive {i} ({hits}/100)"));
        }
        let neg_window = if i % 2 == 0 {
            window_with(rng.gen_range(0..=50), &mut rng)
        } else {
            let mut w = FrameWindow::new(100, 0.5);
            for _ in 0..rng.gen_range(0..100) {
                w.push(vec!["frame".into()]);
            }
            w
        };
        if has(&summary(words, true), Some(&neg_window), Rail::FrameFilling) {
            errors.push(format!("frame negative {i}"));
        }
    }
    let s = summary(vec!["a".into()], true);
    let at_50 = has(&s, Some(&window_with(50, &mut rng)), Rail::FrameFilling);
    let at_51 = has(&s, Some(&window_with(51, &mut rng)), Rail::FrameFilling);
    if at_50 || !at_51 {
        errors.push(format!("boundary: 50/100 fires {at_50}, 51/100 fires {at_51}"));
    }
    check(
        errors.is_empty(),
        if errors.is_empty() {
            "120 constructed cases and the 50/51 boundary classified correctly".into()
        } else {
            errors.join("; ")
        },
    )
}

struct Setup {
    vocab: Vocab,
    docs: Vec<Document>,
    masker: Masker,
    cloze: ShallowCloze,
    lm: NgramLm,
    fluency: FluencyConfig,
}

fn synthetic_setup() -> Setup {
    let syn = generate(&SyntheticConfig::default(), 200, 11);
    let texts: Vec<String> = syn.iter().map(|d| d.record.text.clone()).collect();
    let (vocab, docs) = build_docs(&texts);
    let masker = Masker::new(fit_tfidf(&docs).unwrap(), 5);
    let mut cloze = ShallowCloze::new(&vocab, &ShallowClozeConfig::default());
    train_coverage(&mut cloze, &docs, &masker, &vocab, &CoverageTrainConfig { epochs: 10, ..Default::default() }).unwrap();
    let lm = NgramLm::fit(&vocab, &NgramLmConfig::default(), docs.iter().map(|d| d.tokens())).unwrap();
    let fluency = calibrate_fluency(&lm, &docs, 50, 5.0, 95.0).unwrap();
    let docs = prepare_documents(&docs, &masker, &vocab, 400);
    Setup { vocab, docs, masker, cloze, lm, fluency }
}

impl Setup {
    fn scorer<'a>(&'a self, coverage: &'a CoverageScorer<'a>) -> SummaryScorer<'a> {
        SummaryScorer {
            coverage,
            lm: &self.lm,
            fluency: self.fluency,
            weights: Weights::default(),
            stacking: PenaltyStacking::Stack,
            frame_rule: FrameRule::Window,
        }
    }
}

fn scst_mechanics(setup: &Setup) -> Outcome {
    let (vocab, docs) = (&setup.vocab, &setup.docs);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut identical = true;
    let mut increased = 0;
    for case in 0..100u64 {
        let doc = &docs[rng.gen_range(0..docs.len())];
        let mut model = PointerSummarizer::new(vocab, &PointerSummarizerConfig { seed: case, ..Default::default() });
        let s = decode(&model, vocab, doc, 10, DecodeMode::Sampled { seed: rng.gen(), temperature: 1.0 })
            .map_err(|e| e.to_string())?;
        let before_params = model.flat_params();
        apply_policy_update(&mut model, doc, &s.tokens, 0.0, 0.5).map_err(|e| e.to_string())?;
        identical &= before_params
            .iter()
            .zip(model.flat_params())
            .all(|(a, b)| a.to_bits() == b.to_bits());
        let before = sequence_log_prob(&model, doc, &s.tokens).map_err(|e| e.to_string())?;
        apply_policy_update(&mut model, doc, &s.tokens, rng.gen_range(0.1..3.0), 1e-3).map_err(|e| e.to_string())?;
        if sequence_log_prob(&model, doc, &s.tokens).map_err(|e| e.to_string())? > before {
            increased += 1;
        }
    }
    let coverage = CoverageScorer::new(&setup.cloze, &setup.masker, vocab);
    let scorer = setup.scorer(&coverage);
    let mut gen = PointerSummarizer::new(vocab, &PointerSummarizerConfig::default());
    let mut state = TrainerState::new(0, FrameWindow::default());
    let cfg = StepConfig { budget: 10, step_size: 0.05, temperature: 1.0, seed: 0 };
    let mut worst: f64 = 0.0;
    for doc in docs.iter().take(20) {
        let out = scst_step(&mut gen, &scorer, vocab, &[doc], &cfg, &mut state).map_err(|e| e.to_string())?;
        let o = &out[0];
        let hand = (o.greedy_score.total - o.sampled_score.total) * o.sampled.sum_log_prob();
        worst = worst.max((o.loss - hand).abs()).max((scst_loss(o.greedy_score.total, o.sampled_score.total, o.sampled.sum_log_prob()) - hand).abs());
    }
    check(
        identical && increased == 100 && worst < 1e-9,
        format!("zero advantage bit-identical: {identical}; likelihood rose in {increased}/100; loss error {worst:.1e}"),
    )
}

fn quartile_stats(rows: &[MetricsRow]) -> (f64, f64, f64) {
    let q = rows.len() / 4;
    let mean = |rs: &[MetricsRow]| rs.iter().map(|r| r.coverage).sum::<f64>() / rs.len() as f64;
    let last = &rows[rows.len() - q..];
    let railed = last.iter().filter(|r| !r.rails.is_empty()).count() as f64;
    (mean(&rows[..q]), mean(last), railed / q as f64)
}

fn synthetic_loop(setup: &Setup) -> Outcome {
    let start = Instant::now();
    let coverage = CoverageScorer::new(&setup.cloze, &setup.masker, &setup.vocab);
    let scorer = setup.scorer(&coverage);
    let (mut wins, mut rail_sum, mut max_rail) = (0, 0.0, 0.0f64);
    let mut per_seed = Vec::new();
    for seed in 0..10u64 {
        let mut gen = PointerSummarizer::new(
            &setup.vocab,
            &PointerSummarizerConfig { seed, length_hint: 10, ..Default::default() },
        );
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let cfg = TrainConfig {
            budget: 10,
            steps: 2000,
            seed,
            step_size: 0.05,
            checkpoint_every: 0,
            ..Default::default()
        };
        let state = train_loop(&mut gen, &scorer, &setup.vocab, &setup.docs, &cfg, dir.path(), TrainerState::new(seed, FrameWindow::default()))
            .map_err(|e| e.to_string())?;
        let (first, last, rail) = quartile_stats(&state.metrics);
        if last > first {
            wins += 1;
        }
        rail_sum += rail;
        max_rail = max_rail.max(rail);
        per_seed.push(format!("{first:.2}->{last:.2}"));
    }
    let pooled = rail_sum / 10.0;
    let elapsed = start.elapsed();
    check(
        wins >= 8 && pooled < 0.10 && elapsed < Duration::from_secs(600),
        format!(
            "coverage rose in {wins}/10 seeds [{}]; final-quartile rail rate {:.1}% (worst seed {:.1}%); {elapsed:.1?}",
            per_seed.join(" "),
            100.0 * pooled,
            100.0 * max_rail
        ),
    )
}

fn span_decomposition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut invariant_failures, mut dp_cases, mut dp_failures) = (0, 0, 0);
    for _ in 0..1000 {
        let (doc, summary) = random_span_pair(&mut rng, 30);
        let d = copied_spans(&doc, &summary);
        if check_decomposition(&doc, &summary, &d).is_err() {
            invariant_failures += 1;
        }
        if summary.len() <= 20 {
            dp_cases += 1;
            if d.bucket_counts() != dp_bucket_counts(&doc, &summary) {
                dp_failures += 1;
            }
        }
    }
    check(
        invariant_failures == 0 && dp_failures == 0,
        format!("{invariant_failures} invariant failures in 1000 pairs; {dp_failures} DP mismatches in {dp_cases} summaries of <= 20 words"),
    )
}

fn rouge_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut identity_ok = true;
    for _ in 0..100 {
        let mut x = random_words(&mut rng, 20, 15);
        x.push("end".into());
        let s = rouge_scores(&x, &x);
        identity_ok &= (s.rouge1, s.rouge2, s.rouge_l) == (1.0, 1.0, 1.0);
    }
    let table_ok = rouge_hand_table().iter().all(|&(r, h, r1, r2, rl)| {
        let (r, h) = (words(r), words(h));
        (rouge_n(&r, &h, 1) - r1).abs() < 1e-12 && (rouge_n(&r, &h, 2) - r2).abs() < 1e-12 && (rouge_l(&r, &h) - rl).abs() < 1e-12
    });
    let mut violations = 0;
    for _ in 0..1000 {
        let r = random_words(&mut rng, 30, 12);
        let h = random_words(&mut rng, 30, 12);
        let s = rouge_scores(&r, &h);
        if s.rouge_l > s.rouge1 {
            violations += 1;
        }
    }
    check(
        identity_ok && table_ok && violations == 0,
        format!("identity (1,1,1): {identity_ok}; hand table: {table_ok}; R-L > R-1 in {violations}/1000 pairs"),
    )
}

fn cli(out: &Path, args: &[&str]) -> Result<Vec<u8>, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_summary-loop"))
        .env_remove("SUMMARY_LOOP_HOME")
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&o.stderr).trim()));
    }
    Ok(o.stdout)
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let records: Vec<CorpusRecord> = generate(&SyntheticConfig::default(), 200, 11).into_iter().map(|d| d.record).collect();
    let corpus = tmp.path().join("corpus.jsonl");
    write_records(&corpus, &records).map_err(|e| e.to_string())?;
    let corpus = corpus.to_str().unwrap();
    let mut logs = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        for cmd in ["fit-masker", "train-coverage", "calibrate-fluency"] {
            cli(&out, &["--corpus", corpus, "--seed", "7", cmd])?;
        }
        cli(&out, &["--corpus", corpus, "train", "--steps", "200", "--seed", "7"])?;
        logs.push(std::fs::read(out.join("train/metrics.csv")).map_err(|e| e.to_string())?);
    }
    let lines = String::from_utf8_lossy(&logs[0]).lines().count();
    check(
        logs[0] == logs[1] && lines == 201,
        format!("two runs of train --steps 200 --seed 7: byte-identical {}; {} bytes, {lines} lines", logs[0] == logs[1], logs[0].len()),
    )
}

fn main() {
    let setup = synthetic_setup();
    let criteria: Vec<Criterion> = vec![
        ("normalization identity", Box::new(normalization_identity)),
        ("coverage table fixtures", Box::new(table_fixtures)),
        ("tf-idf oracle equivalence", Box::new(tfidf_oracle)),
        ("fluency endpoints", Box::new(fluency_endpoints)),
        ("guard rails", Box::new(guard_rails)),
        ("self-critical mechanics", Box::new(|| scst_mechanics(&setup))),
        ("end-to-end synthetic loop", Box::new(|| synthetic_loop(&setup))),
        ("span decomposition", Box::new(span_decomposition)),
        ("ROUGE self-consistency", Box::new(rouge_consistency)),
        ("determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (status, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {status} {name}: {detail}", i + 1);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
