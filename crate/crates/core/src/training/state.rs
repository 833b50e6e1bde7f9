//! Trainer state, metrics log and the resumable outer loop.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{derive_seed, scst_step, StepConfig, StepOutcome};
use crate::backends::{load_checkpoint, save_checkpoint, Checkpoint, Summarizer};
use crate::corpus::{Document, Vocab};
use crate::error::{Error, Result};
use crate::scoring::{FrameWindow, Rails, SummaryScorer};

pub const METRICS_FILE: &str = "metrics.csv";
pub const STATE_FILE: &str = "state.json";
pub const CHECKPOINTS_DIR: &str = "checkpoints";
pub const METRICS_HEADER: &str = "step,fluency,coverage,score,words,rails";

/// One logged step; values describe the greedy summaries of the batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub step: u64,
    pub fluency: f64,
    pub coverage: f64,
    pub score: f64,
    pub words: f64,
    pub rails: Rails,
}

impl MetricsRow {
    pub(crate) fn from_outcomes(step: u64, outcomes: &[StepOutcome]) -> Self {
        let n = outcomes.len() as f64;
        let mean = |f: &dyn Fn(&StepOutcome) -> f64| outcomes.iter().map(f).sum::<f64>() / n;
        MetricsRow {
            step,
            fluency: mean(&|o| o.greedy_score.fluency),
            coverage: mean(&|o| o.greedy_score.coverage),
            score: mean(&|o| o.greedy_score.total),
            words: mean(&|o| o.greedy.words.len() as f64),
            rails: outcomes
                .iter()
                .flat_map(|o| o.greedy_score.rails_triggered.iter().copied())
                .collect(),
        }
    }

    fn csv_line(&self) -> String {
        let rails: Vec<&str> = self.rails.iter().map(|r| r.as_str()).collect();
        format!(
            "{},{:.6},{:.6},{:.6},{},{}",
            self.step,
            self.fluency,
            self.coverage,
            self.score,
            self.words,
            rails.join("|")
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerState {
    pub step: u64,
    pub seed: u64,
    pub window: FrameWindow,
    pub metrics: Vec<MetricsRow>,
}

impl TrainerState {
    pub fn new(seed: u64, window: FrameWindow) -> Self {
        TrainerState {
            step: 0,
            seed,
            window,
            metrics: Vec::new(),
        }
    }

    /// Mean (fluency, coverage, score, words) over the last `n` rows.
    pub fn running_means(&self, n: usize) -> Option<(f64, f64, f64, f64)> {
        let rows = &self.metrics[self.metrics.len().saturating_sub(n)..];
        if rows.is_empty() {
            return None;
        }
        let k = rows.len() as f64;
        let sum = |f: fn(&MetricsRow) -> f64| rows.iter().map(f).sum::<f64>() / k;
        Some((sum(|r| r.fluency), sum(|r| r.coverage), sum(|r| r.score), sum(|r| r.words)))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let state: TrainerState = serde_json::from_str(&text)?;
        if state.metrics.len() as u64 != state.step {
            return Err(Error::Checkpoint(format!(
                "{}: {} metrics rows for step {}",
                path.display(),
                state.metrics.len(),
                state.step
            )));
        }
        Ok(state)
    }
}

pub fn write_metrics(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", r.csv_line());
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let bad = |what: &str| Error::Record {
            line: i + 1,
            message: format!("bad {what}"),
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(bad("column count"));
        }
        let num = |s: &str, what: &str| s.parse::<f64>().map_err(|_| bad(what));
        let rails = if f[5].is_empty() {
            Rails::new()
        } else {
            f[5].split('|')
                .map(|r| r.parse().map_err(|_| bad("rail")))
                .collect::<Result<_>>()?
        };
        rows.push(MetricsRow {
            step: f[0].parse().map_err(|_| bad("step"))?,
            fluency: num(f[1], "fluency")?,
            coverage: num(f[2], "coverage")?,
            score: num(f[3], "score")?,
            words: num(f[4], "words")?,
            rails,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub budget: usize,
    /// Total number of steps; a resumed run continues up to this count.
    pub steps: u64,
    pub seed: u64,
    pub step_size: f64,
    pub temperature: f64,
    pub batch_size: usize,
    pub checkpoint_every: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            budget: 10,
            steps: 1000,
            seed: 0,
            step_size: 0.05,
            temperature: 1.0,
            batch_size: 1,
            checkpoint_every: 100,
        }
    }
}

fn checkpoint_dir(out_dir: &Path, step: u64) -> PathBuf {
    out_dir.join(CHECKPOINTS_DIR).join(format!("step-{step}"))
}

fn persist<S: Checkpoint>(gen: &S, vocab: &Vocab, state: &TrainerState, out_dir: &Path) -> Result<()> {
    save_checkpoint(&checkpoint_dir(out_dir, state.step), gen, vocab)?;
    state.save(&out_dir.join(STATE_FILE))?;
    write_metrics(&out_dir.join(METRICS_FILE), &state.metrics)
}

/// Summarizer and state saved by the last checkpoint in `out_dir`, if any.
pub fn load_resume_point<S: Checkpoint>(out_dir: &Path, vocab: &Vocab) -> Result<Option<(S, TrainerState)>> {
    let path = out_dir.join(STATE_FILE);
    if !path.exists() {
        return Ok(None);
    }
    let state = TrainerState::load(&path)?;
    let gen = load_checkpoint(&checkpoint_dir(out_dir, state.step), vocab)?;
    Ok(Some((gen, state)))
}

/// Document order for one pass over the corpus.
fn epoch_order(seed: u64, epoch: u64, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, epoch, u64::MAX)));
    order
}

/// Runs self-critical steps until `config.steps`, writing checkpoints,
/// `state.json` and `metrics.csv` under `out_dir`. A fresh state writes an
/// initial checkpoint at step 0.
pub fn train_loop<S: Summarizer + Checkpoint>(
    gen: &mut S,
    scorer: &SummaryScorer<'_>,
    vocab: &Vocab,
    docs: &[Document],
    config: &TrainConfig,
    out_dir: &Path,
    mut state: TrainerState,
) -> Result<TrainerState> {
    if docs.is_empty() {
        return Err(Error::Empty("training corpus"));
    }
    if config.batch_size == 0 {
        return Err(Error::Config("batch size must be at least 1".into()));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    if state.step == 0 {
        persist(gen, vocab, &state, out_dir)?;
    }
    let step_cfg = StepConfig {
        budget: config.budget,
        step_size: config.step_size,
        temperature: config.temperature,
        seed: config.seed,
    };
    let n = docs.len();
    let mut cached: Option<(u64, Vec<usize>)> = None;
    while state.step < config.steps {
        let mut batch = Vec::with_capacity(config.batch_size);
        for b in 0..config.batch_size as u64 {
            let g = state.step * config.batch_size as u64 + b;
            let epoch = g / n as u64;
            if cached.as_ref().map(|c| c.0) != Some(epoch) {
                cached = Some((epoch, epoch_order(config.seed, epoch, n)));
            }
            let order = &cached.as_ref().unwrap().1;
            batch.push(&docs[order[(g % n as u64) as usize]]);
        }
        scst_step(gen, scorer, vocab, &batch, &step_cfg, &mut state)?;
        if state.step == config.steps || (config.checkpoint_every > 0 && state.step.is_multiple_of(config.checkpoint_every)) {
            persist(gen, vocab, &state, out_dir)?;
        }
    }
    Ok(state)
}
