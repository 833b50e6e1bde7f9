//! The training loop: greedy and sampled decodes, self-critical updates,
//! guard rails and the metrics log.

mod state;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::backends::{PolicyExample, Summarizer};
use crate::corpus::{Document, SummaryText, TokenId, Vocab};
use crate::error::{Error, Result};
use crate::masking::Masker;
use crate::scoring::{ScoreBreakdown, SummaryScorer};

pub use state::{
    load_resume_point, read_metrics, train_loop, write_metrics, MetricsRow, TrainConfig,
    TrainerState, CHECKPOINTS_DIR, METRICS_FILE, METRICS_HEADER, STATE_FILE,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeMode {
    Greedy,
    Sampled { seed: u64, temperature: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummarySample {
    /// Emitted tokens, ending with END when `ended` is set.
    pub tokens: Vec<TokenId>,
    /// Surface words, END excluded.
    pub words: Vec<String>,
    pub ended: bool,
    /// `ln p` of each entry of `tokens`.
    pub log_probs: Vec<f64>,
    pub mode: DecodeMode,
}

impl SummarySample {
    pub fn sum_log_prob(&self) -> f64 {
        self.log_probs.iter().sum()
    }

    pub fn summary(&self) -> SummaryText {
        let n = self.words.len();
        SummaryText {
            tokens: self.tokens[..n].to_vec(),
            words: self.words.clone(),
            ended: self.ended,
        }
    }
}

/// Decodes at most `budget` words. At step `budget` only END may be emitted;
/// any other choice stops decoding with `ended = false`.
pub fn decode(
    gen: &dyn Summarizer,
    vocab: &Vocab,
    doc: &Document,
    budget: usize,
    mode: DecodeMode,
) -> Result<SummarySample> {
    if budget == 0 {
        return Err(Error::Config("word budget must be at least 1".into()));
    }
    let end = gen.end_token();
    let mut rng = match mode {
        DecodeMode::Sampled { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed)),
        DecodeMode::Greedy => None,
    };
    let mut tokens = Vec::with_capacity(budget + 1);
    let mut log_probs = Vec::with_capacity(budget + 1);
    let mut ended = false;
    for j in 0..=budget {
        let dist = gen.next_token_distribution(doc, &tokens)?;
        let t = match (&mut rng, mode) {
            (Some(rng), DecodeMode::Sampled { temperature, .. }) => dist.sample(rng, temperature),
            _ => dist.argmax(),
        };
        if t == end {
            tokens.push(t);
            log_probs.push(dist.log_prob(t));
            ended = true;
            break;
        }
        if j == budget {
            break;
        }
        tokens.push(t);
        log_probs.push(dist.log_prob(t));
    }
    let words = tokens
        .iter()
        .filter(|&&t| t != end)
        .map(|&t| vocab.token(t).to_string())
        .collect();
    Ok(SummarySample {
        tokens,
        words,
        ended,
        log_probs,
        mode,
    })
}

/// `(R̂ - R^s) * Σ ln p(S^s)`.
pub fn scst_loss(greedy_reward: f64, sampled_reward: f64, sum_log_prob: f64) -> f64 {
    (greedy_reward - sampled_reward) * sum_log_prob
}

/// Mixes a run seed with a step and slot into an independent stream seed.
pub fn derive_seed(seed: u64, step: u64, slot: u64) -> u64 {
    let mut z = seed
        .wrapping_add(step.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(slot.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepConfig {
    pub budget: usize,
    pub step_size: f64,
    pub temperature: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub loss: f64,
    pub advantage: f64,
    pub greedy: SummarySample,
    pub sampled: SummarySample,
    pub greedy_score: ScoreBreakdown,
    pub sampled_score: ScoreBreakdown,
}

/// One self-critical step over `batch`. Each sampled summary is pushed into
/// the frame window before scoring, and the window condition applies to
/// both the greedy and the sampled summary.
pub fn scst_step(
    gen: &mut dyn Summarizer,
    scorer: &SummaryScorer<'_>,
    vocab: &Vocab,
    batch: &[&Document],
    cfg: &StepConfig,
    state: &mut TrainerState,
) -> Result<Vec<StepOutcome>> {
    if batch.is_empty() {
        return Err(Error::Empty("training batch"));
    }
    let mut outcomes = Vec::with_capacity(batch.len());
    for (slot, doc) in batch.iter().enumerate() {
        let greedy = decode(&*gen, vocab, doc, cfg.budget, DecodeMode::Greedy)?;
        let sampled = decode(
            &*gen,
            vocab,
            doc,
            cfg.budget,
            DecodeMode::Sampled {
                seed: derive_seed(cfg.seed, state.step, slot as u64),
                temperature: cfg.temperature,
            },
        )?;
        state.window.push(sampled.words.clone());
        let greedy_score = scorer.score(doc, &greedy.summary(), Some(&state.window))?;
        let sampled_score = scorer.score(doc, &sampled.summary(), Some(&state.window))?;
        outcomes.push(StepOutcome {
            loss: scst_loss(greedy_score.total, sampled_score.total, sampled.sum_log_prob()),
            advantage: sampled_score.total - greedy_score.total,
            greedy,
            sampled,
            greedy_score,
            sampled_score,
        });
    }
    let examples: Vec<PolicyExample<'_>> = outcomes
        .iter()
        .zip(batch)
        .map(|(o, doc)| PolicyExample {
            document: doc,
            tokens: &o.sampled.tokens,
            advantage: o.advantage,
        })
        .collect();
    gen.apply_policy_update(&examples, cfg.step_size)?;
    state.step += 1;
    state.metrics.push(MetricsRow::from_outcomes(state.step, &outcomes));
    Ok(outcomes)
}

/// Truncates documents to `max_words` and drops those with no words or no
/// masked keyword.
pub fn prepare_documents(docs: &[Document], masker: &Masker, vocab: &Vocab, max_words: usize) -> Vec<Document> {
    docs.iter()
        .map(|d| d.truncated(max_words))
        .filter(|d| !d.is_empty() && masker.mask(d, vocab).blank_count() > 0)
        .collect()
}
