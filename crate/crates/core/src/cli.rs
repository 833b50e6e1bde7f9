//! Subcommand entry point. Every stage reads its prerequisites from and writes
//! its outputs to one artifact directory.
//!
//! Layout of the artifact directory:
//!
//! ```text
//! vocab.txt  tfidf.json            fit-masker
//! coverage/  coverage_loss.csv     train-coverage
//! lm/        fluency.conf          calibrate-fluency
//! train/                           train (metrics.csv, state.json, checkpoints/)
//! summaries.jsonl                  summarize
//! scores.csv                       score
//! coverage_report.{csv,txt}        report-coverage
//! abstraction.{csv,txt} spans.jsonl report-abstraction
//! rouge.csv                        rouge
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context as _;
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{abstraction_report, copied_spans, rouge_scores};
use crate::backends::{
    load_checkpoint, load_cloze, save_checkpoint, ClozeModel, FrequencyBaselineCloze, NgramLm,
    NgramLmConfig, PointerSummarizer, PointerSummarizerConfig, ShallowCloze, ShallowClozeConfig,
};
use crate::config::RunConfig;
use crate::corpus::{first_k_words, load_corpus, Corpus, Document, SummaryText, Vocab};
use crate::coverage::{
    blank_accuracy, dataset_coverage_report, train_coverage, CoverageScorer, CoverageTrainConfig,
    PairGroup,
};
use crate::error::Error;
use crate::fluency::{calibrate_fluency, FluencyConfig};
use crate::masking::{fit_tfidf, sample_documents, Masker, TfIdfModel};
use crate::scoring::{FrameWindow, SummaryScorer};
use crate::training::{decode, load_resume_point, train_loop, DecodeMode, TrainConfig, TrainerState};

pub const HOME_ENV: &str = "SUMMARY_LOOP_HOME";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_MISSING_ARTIFACT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "summary-loop", version, about = "Unsupervised length-constrained summarization")]
struct Cli {
    /// Flat `key = value` run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Artifact directory (default: config `out_dir`, then $SUMMARY_LOOP_HOME, then `.`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Summary word budget.
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Total training steps.
    #[arg(long, global = true)]
    steps: Option<u64>,
    /// Cloze backend for train-coverage: `shallow` or `baseline`.
    #[arg(long, global = true)]
    backend: Option<String>,
    /// JSON-lines corpus used for fitting and training.
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// JSON-lines documents to summarize, score or analyse (default: the corpus).
    #[arg(long, global = true)]
    doc: Option<PathBuf>,
    /// JSON-lines `{"id", "summary"}` records.
    #[arg(long, global = true)]
    summaries: Option<PathBuf>,
    #[arg(long, global = true)]
    vocab: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the vocabulary and fit the tf-idf keyword model.
    FitMasker,
    /// Train or fit the cloze backend used for coverage.
    TrainCoverage,
    /// Fit the n-gram language model and the fluency endpoints.
    CalibrateFluency,
    /// Train the summarizer, resuming from `train/state.json` when present.
    Train,
    /// Greedy-decode a summary for every document.
    Summarize,
    /// Score document/summary pairs.
    Score,
    /// Coverage of trivial, reference and supplied summaries.
    ReportCoverage,
    /// Copied-span histogram of supplied or reference summaries.
    ReportAbstraction,
    /// ROUGE of supplied summaries against reference summaries.
    Rouge,
}

/// One line of a summaries file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub id: String,
    pub summary: String,
}

/// Runs one command and returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            let missing = e
                .chain()
                .any(|c| matches!(c.downcast_ref::<Error>(), Some(Error::MissingArtifact(_))));
            if missing {
                EXIT_MISSING_ARTIFACT
            } else {
                EXIT_FAILURE
            }
        }
    }
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
    doc: Option<PathBuf>,
    summaries: Option<PathBuf>,
}

fn require(path: PathBuf, what: &str) -> crate::Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::MissingArtifact(format!("{what} ({})", path.display())))
    }
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

impl Ctx {
    fn from_cli(cli: &Cli) -> anyhow::Result<Self> {
        let mut cfg = match &cli.config {
            Some(path) => RunConfig::load(path).with_context(|| format!("config {}", path.display()))?,
            None => RunConfig::default(),
        };
        if let Some(v) = cli.seed {
            cfg.seed = v;
        }
        if let Some(v) = cli.budget {
            cfg.budget = v;
        }
        if let Some(v) = cli.steps {
            cfg.steps = v;
        }
        if let Some(v) = &cli.backend {
            cfg.cloze_backend = v.clone();
        }
        if let Some(v) = &cli.corpus {
            cfg.corpus = Some(v.clone());
        }
        if let Some(v) = &cli.vocab {
            cfg.vocab = Some(v.clone());
        }
        let out = cli
            .out
            .clone()
            .or_else(|| cfg.out_dir.clone())
            .or_else(|| std::env::var_os(HOME_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        Ok(Ctx {
            cfg,
            out,
            doc: cli.doc.clone(),
            summaries: cli.summaries.clone(),
        })
    }

    fn artifact(&self, configured: &Option<PathBuf>, default: &str) -> PathBuf {
        configured.clone().unwrap_or_else(|| self.out.join(default))
    }

    fn vocab(&self) -> anyhow::Result<Vocab> {
        let path = require(self.artifact(&self.cfg.vocab, "vocab.txt"), "vocabulary")?;
        Ok(Vocab::load(&path)?)
    }

    fn masker(&self) -> anyhow::Result<Masker> {
        let path = require(self.artifact(&self.cfg.tfidf, "tfidf.json"), "tf-idf model")?;
        Ok(Masker::new(TfIdfModel::load(&path)?, self.cfg.k))
    }

    fn corpus_path(&self) -> anyhow::Result<PathBuf> {
        let path = self
            .cfg
            .corpus
            .clone()
            .ok_or_else(|| Error::MissingArtifact("corpus (--corpus or config corpus)".into()))?;
        Ok(require(path, "corpus")?)
    }

    /// Documents truncated to `max_doc_words`, with their reference summaries.
    fn load_docs(&self, path: &Path, vocab: &Vocab) -> anyhow::Result<Corpus> {
        let mut corpus = load_corpus(path, vocab).with_context(|| format!("corpus {}", path.display()))?;
        for d in &mut corpus.documents {
            *d = d.truncated(self.cfg.max_doc_words);
        }
        Ok(corpus)
    }

    fn corpus(&self, vocab: &Vocab) -> anyhow::Result<Corpus> {
        self.load_docs(&self.corpus_path()?, vocab)
    }

    /// `--doc` when given, otherwise the corpus.
    fn input_docs(&self, vocab: &Vocab) -> anyhow::Result<Corpus> {
        match &self.doc {
            Some(p) => self.load_docs(&require(p.clone(), "documents")?, vocab),
            None => self.corpus(vocab),
        }
    }

    fn cloze(&self, vocab: &Vocab) -> anyhow::Result<Box<dyn ClozeModel>> {
        let dir = require(
            self.artifact(&self.cfg.coverage_checkpoint, "coverage"),
            "coverage checkpoint (run train-coverage)",
        )?;
        Ok(load_cloze(&dir, vocab)?)
    }

    fn lm(&self, vocab: &Vocab) -> anyhow::Result<NgramLm> {
        let dir = require(
            self.artifact(&self.cfg.lm_checkpoint, "lm"),
            "language model checkpoint (run calibrate-fluency)",
        )?;
        Ok(load_checkpoint(&dir, vocab)?)
    }

    /// Explicit `lp_low` / `lp_high` win over `fluency.conf`.
    fn fluency(&self) -> anyhow::Result<FluencyConfig> {
        let (mut low, mut high) = (self.cfg.lp_low, self.cfg.lp_high);
        if low.is_none() || high.is_none() {
            let path = require(self.out.join("fluency.conf"), "fluency calibration (run calibrate-fluency)")?;
            let calibrated = RunConfig::load(&path)?;
            low = low.or(calibrated.lp_low);
            high = high.or(calibrated.lp_high);
        }
        match (low, high) {
            (Some(l), Some(h)) => Ok(FluencyConfig::new(l, h)?),
            _ => Err(Error::MissingArtifact("lp_low and lp_high in fluency.conf".into()).into()),
        }
    }

    fn summaries(&self) -> anyhow::Result<Option<HashMap<String, String>>> {
        let Some(path) = &self.summaries else {
            return Ok(None);
        };
        let path = require(path.clone(), "summaries")?;
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let r: SummaryRecord = serde_json::from_str(line).map_err(|e| Error::Record {
                line: i + 1,
                message: format!("malformed summary record: {e}"),
            })?;
            if out.insert(r.id.clone(), r.summary).is_some() {
                return Err(Error::DuplicateId { id: r.id, line: i + 1 }.into());
            }
        }
        Ok(Some(out))
    }

    /// Supplied summaries, or the reference summaries when none were given.
    fn pairs(&self, corpus: &Corpus, vocab: &Vocab) -> anyhow::Result<Vec<(Document, SummaryText)>> {
        let pairs: Vec<_> = match self.summaries()? {
            Some(map) => corpus
                .documents
                .iter()
                .filter_map(|d| map.get(d.id()).map(|s| (d.clone(), SummaryText::from_text(s, vocab, true))))
                .collect(),
            None => corpus
                .documents
                .iter()
                .filter_map(|d| corpus.reference(d.id()).map(|s| (d.clone(), SummaryText::from_text(s, vocab, true))))
                .collect(),
        };
        if pairs.is_empty() {
            return Err(Error::MissingArtifact("summaries (--summaries) or reference summaries".into()).into());
        }
        Ok(pairs)
    }
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    let ctx = Ctx::from_cli(&cli)?;
    match cli.command {
        Command::FitMasker => fit_masker(&ctx),
        Command::TrainCoverage => train_coverage_cmd(&ctx),
        Command::CalibrateFluency => calibrate_fluency_cmd(&ctx),
        Command::Train => train_cmd(&ctx),
        Command::Summarize => summarize_cmd(&ctx),
        Command::Score => score_cmd(&ctx),
        Command::ReportCoverage => report_coverage_cmd(&ctx),
        Command::ReportAbstraction => report_abstraction_cmd(&ctx),
        Command::Rouge => rouge_cmd(&ctx),
    }
}

fn fit_masker(ctx: &Ctx) -> anyhow::Result<()> {
    let path = ctx.corpus_path()?;
    let records = crate::corpus::read_records(&path)?;
    let vocab = Vocab::from_texts(records.iter().map(|r| r.text.as_str()));
    let corpus = ctx.load_docs(&path, &vocab)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed);
    let sample = sample_documents(&corpus.documents, ctx.cfg.tfidf_sample, &mut rng);
    let model = fit_tfidf(&sample)?;
    vocab.save(&ctx.out.join("vocab.txt"))?;
    model.save(&ctx.out.join("tfidf.json"))?;
    println!(
        "vocabulary {} tokens, tf-idf fitted on {} documents ({} terms)",
        vocab.len(),
        model.n_docs(),
        model.vocabulary_len()
    );
    Ok(())
}

fn train_coverage_cmd(ctx: &Ctx) -> anyhow::Result<()> {
    let vocab = ctx.vocab()?;
    let masker = ctx.masker()?;
    let docs = ctx.corpus(&vocab)?.documents;
    let dir = ctx.artifact(&ctx.cfg.coverage_checkpoint, "coverage");
    let proxy = ctx.cfg.proxy_len;
    let cloze: Box<dyn ClozeModel> = match ctx.cfg.cloze_backend.as_str() {
        "shallow" => {
            let mut model = ShallowCloze::new(
                &vocab,
                &ShallowClozeConfig {
                    seed: ctx.cfg.seed,
                    ..Default::default()
                },
            );
            let losses = train_coverage(
                &mut model,
                &docs,
                &masker,
                &vocab,
                &CoverageTrainConfig {
                    epochs: ctx.cfg.coverage_epochs,
                    seed: ctx.cfg.seed,
                    learning_rate: ctx.cfg.coverage_lr,
                    proxy_len: proxy,
                },
            )?;
            let mut csv = String::from("epoch,loss\n");
            for (i, l) in losses.iter().enumerate() {
                let _ = writeln!(csv, "{},{l:.6}", i + 1);
            }
            write(&ctx.out.join("coverage_loss.csv"), &csv)?;
            save_checkpoint(&dir, &model, &vocab)?;
            Box::new(model)
        }
        "baseline" => {
            let model = FrequencyBaselineCloze::fit(&docs, &masker, &vocab);
            save_checkpoint(&dir, &model, &vocab)?;
            Box::new(model)
        }
        other => anyhow::bail!("unknown cloze backend {other:?}; expected shallow or baseline"),
    };
    let empty = blank_accuracy(&*cloze, &docs, &masker, &vocab, |_| SummaryText::empty(true))?;
    let with_proxy = blank_accuracy(&*cloze, &docs, &masker, &vocab, |d| first_k_words(d, proxy))?;
    println!(
        "{} cloze saved to {}; blank accuracy {empty:.3} with empty summary, {with_proxy:.3} with first {proxy} words",
        cloze.backend_id(),
        dir.display()
    );
    Ok(())
}

fn calibrate_fluency_cmd(ctx: &Ctx) -> anyhow::Result<()> {
    let vocab = ctx.vocab()?;
    let docs = ctx.corpus(&vocab)?.documents;
    let lm = NgramLm::fit(
        &vocab,
        &NgramLmConfig {
            order: ctx.cfg.lm_order,
            smoothing: ctx.cfg.lm_smoothing,
        },
        docs.iter().map(|d| d.tokens()),
    )?;
    let fluency = calibrate_fluency(
        &lm,
        &docs,
        ctx.cfg.proxy_len,
        ctx.cfg.calibration_low,
        ctx.cfg.calibration_high,
    )?;
    save_checkpoint(&ctx.artifact(&ctx.cfg.lm_checkpoint, "lm"), &lm, &vocab)?;
    let conf = format!("lp_low = {}\nlp_high = {}\n", fluency.lp_low(), fluency.lp_high());
    write(&ctx.out.join("fluency.conf"), &conf)?;
    println!("lp_low = {:.4}, lp_high = {:.4}", fluency.lp_low(), fluency.lp_high());
    Ok(())
}

fn train_cmd(ctx: &Ctx) -> anyhow::Result<()> {
    let cfg = &ctx.cfg;
    let vocab = ctx.vocab()?;
    let masker = ctx.masker()?;
    let cloze = ctx.cloze(&vocab)?;
    let lm = ctx.lm(&vocab)?;
    let fluency = ctx.fluency()?;
    let corpus = ctx.corpus(&vocab)?;
    let docs = crate::training::prepare_documents(&corpus.documents, &masker, &vocab, cfg.max_doc_words);
    let coverage = CoverageScorer::new(&*cloze, &masker, &vocab);
    let scorer = SummaryScorer {
        coverage: &coverage,
        lm: &lm,
        fluency,
        weights: cfg.weights(),
        stacking: cfg.rail_stacking,
        frame_rule: cfg.frame_rule,
    };
    let out_dir = ctx.out.join("train");
    let (mut gen, state) = match load_resume_point::<PointerSummarizer>(&out_dir, &vocab)? {
        Some((gen, state)) => {
            if state.seed != cfg.seed {
                anyhow::bail!(
                    "{} was started with seed {}, not {}",
                    out_dir.display(),
                    state.seed,
                    cfg.seed
                );
            }
            println!("resuming from step {}", state.step);
            (gen, state)
        }
        None => {
            let gen = PointerSummarizer::new(
                &vocab,
                &PointerSummarizerConfig {
                    length_hint: cfg.budget,
                    seed: cfg.seed,
                    ..Default::default()
                },
            );
            (gen, TrainerState::new(cfg.seed, FrameWindow::new(cfg.window, cfg.frame_threshold)))
        }
    };
    std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    cfg.save(&out_dir.join("run.conf"))?;
    let train_cfg = TrainConfig {
        budget: cfg.budget,
        steps: cfg.steps,
        seed: cfg.seed,
        step_size: cfg.step_size,
        temperature: cfg.temperature,
        batch_size: cfg.batch_size,
        checkpoint_every: cfg.checkpoint_every,
    };
    let state = train_loop(&mut gen, &scorer, &vocab, &docs, &train_cfg, &out_dir, state)?;
    match state.running_means(100) {
        Some((flu, cov, score, words)) => println!(
            "step {}: last-100 means fluency {flu:.3}, coverage {cov:.3}, score {score:.3}, words {words:.1}",
            state.step
        ),
        None => println!("step {}: no training steps taken", state.step),
    }
    Ok(())
}

fn summarizer(ctx: &Ctx, vocab: &Vocab) -> anyhow::Result<PointerSummarizer> {
    if let Some(dir) = &ctx.cfg.summarizer_checkpoint {
        return Ok(load_checkpoint(&require(dir.clone(), "summarizer checkpoint")?, vocab)?);
    }
    match load_resume_point::<PointerSummarizer>(&ctx.out.join("train"), vocab)? {
        Some((gen, _)) => Ok(gen),
        None => Err(Error::MissingArtifact("summarizer checkpoint (run train)".into()).into()),
    }
}

fn summarize_cmd(ctx: &Ctx) -> anyhow::Result<()> {
    let vocab = ctx.vocab()?;
    let gen = summarizer(ctx, &vocab)?;
    let corpus = ctx.input_docs(&vocab)?;
    let mut out = String::new();
    for doc in &corpus.documents {
        let sample = decode(&gen, &vocab, doc, ctx.cfg.budget, DecodeMode::Greedy)?;
        let record = SummaryRecord {
            id: doc.id().to_string(),
            summary: sample.words.join(" "),
        };
        let _ = writeln!(out, "{}", serde_json::to_string(&record)?);
    }
    write(&ctx.out.join("summaries.jsonl"), &out)?;
    print!("{out}");
    Ok(())
}

fn score_cmd(ctx: &Ctx) -> anyhow::Result<()> {
    let vocab = ctx.vocab()?;
    let masker = ctx.masker()?;
    let cloze = ctx.cloze(&vocab)?;
    let lm = ctx.lm(&vocab)?;
    let coverage = CoverageScorer::new(&*cloze, &masker, &vocab);
    let scorer = SummaryScorer {
        coverage: &coverage,
        lm: &lm,
        fluency: ctx.fluency()?,
        weights: ctx.cfg.weights(),
        stacking: ctx.cfg.rail_stacking,
        frame_rule: ctx.cfg.frame_rule,
    };
    let corpus = ctx.input_docs(&vocab)?;
    let mut csv = String::from("id,coverage,fluency,rails,score\n");
    for (doc, summary) in ctx.pairs(&corpus, &vocab)? {
        let s = scorer.score(&doc, &summary, None)?;
        let _ = writeln!(
            csv,
            "{},{:.6},{:.6},{},{:.6}",
            doc.id(),
            s.coverage,
            s.fluency,
            s.rails_label(),
            s.total
        );
    }
    write(&ctx.out.join("scores.csv"), &csv)?;
    print!("{csv}");
    Ok(())
}

fn report_coverage_cmd(ctx: &Ctx) -> anyhow::Result<()> {
    let vocab = ctx.vocab()?;
    let masker = ctx.masker()?;
    let cloze = ctx.cloze(&vocab)?;
    let corpus = ctx.input_docs(&vocab)?;
    let docs = &corpus.documents;
    let mut groups: Vec<PairGroup> = vec![(
        "empty".into(),
        docs.iter().map(|d| (d.clone(), SummaryText::empty(true))).collect(),
    )];
    for n in [10, 24, 46] {
        groups.push((
            format!("first-{n}"),
            docs.iter().map(|d| (d.clone(), first_k_words(d, n))).collect(),
        ));
    }
    let references: Vec<_> = docs
        .iter()
        .filter_map(|d| corpus.reference(d.id()).map(|s| (d.clone(), SummaryText::from_text(s, &vocab, true))))
        .collect();
    if !references.is_empty() {
        groups.push(("reference".into(), references));
    }
    if ctx.summaries.is_some() {
        groups.push(("summaries".into(), ctx.pairs(&corpus, &vocab)?));
    }
    let report = dataset_coverage_report(&CoverageScorer::new(&*cloze, &masker, &vocab), &groups)?;
    write(&ctx.out.join("coverage_report.csv"), &report.to_csv())?;
    let text = report.to_text();
    write(&ctx.out.join("coverage_report.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn report_abstraction_cmd(ctx: &Ctx) -> anyhow::Result<()> {
    let vocab = ctx.vocab()?;
    let corpus = ctx.input_docs(&vocab)?;
    let mut spans = String::new();
    let mut decompositions = Vec::new();
    for (doc, summary) in ctx.pairs(&corpus, &vocab)? {
        let d = copied_spans(doc.words(), &summary.words);
        let _ = writeln!(
            spans,
            "{}",
            serde_json::json!({ "id": doc.id(), "segments": &d.segments })
        );
        decompositions.push(d);
    }
    let report = abstraction_report(&decompositions);
    write(&ctx.out.join("abstraction.csv"), &report.to_csv())?;
    write(&ctx.out.join("spans.jsonl"), &spans)?;
    let text = report.to_text();
    write(&ctx.out.join("abstraction.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn rouge_cmd(ctx: &Ctx) -> anyhow::Result<()> {
    let vocab = ctx.vocab()?;
    let corpus = ctx.input_docs(&vocab)?;
    let summaries = ctx
        .summaries()?
        .ok_or_else(|| Error::MissingArtifact("summaries (--summaries)".into()))?;
    let words = |s: &str| -> Vec<String> { s.split_whitespace().map(String::from).collect() };
    let mut csv = String::from("id,rouge1,rouge2,rouge_l\n");
    let (mut n, mut sums) = (0usize, [0.0; 3]);
    for doc in &corpus.documents {
        let (Some(reference), Some(hyp)) = (corpus.reference(doc.id()), summaries.get(doc.id())) else {
            continue;
        };
        let r = rouge_scores(&words(reference), &words(hyp));
        let _ = writeln!(csv, "{},{:.4},{:.4},{:.4}", doc.id(), r.rouge1, r.rouge2, r.rouge_l);
        n += 1;
        for (s, v) in sums.iter_mut().zip([r.rouge1, r.rouge2, r.rouge_l]) {
            *s += v;
        }
    }
    if n == 0 {
        return Err(Error::MissingArtifact("documents with both a reference and a summary".into()).into());
    }
    let mean = sums.map(|s| s / n as f64);
    let _ = writeln!(csv, "mean,{:.4},{:.4},{:.4}", mean[0], mean[1], mean[2]);
    write(&ctx.out.join("rouge.csv"), &csv)?;
    println!(
        "{n} pairs: ROUGE-1 {:.4}, ROUGE-2 {:.4}, ROUGE-L {:.4}",
        mean[0], mean[1], mean[2]
    );
    Ok(())
}
