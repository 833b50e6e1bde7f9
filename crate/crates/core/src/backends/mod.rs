//! Model capability contracts and the small reference implementations.
//!
//! Three capabilities drive the loop: a generative [`Summarizer`], a
//! [`ClozeModel`] that fills masked keywords given a summary, and a
//! [`LanguageModel`] that scores fluency. Training entry points have default
//! implementations that fail with [`Error::NotTrainable`], so frozen or
//! rule-based backends only implement inference.

mod checkpoint;
mod cloze;
mod lm;
mod summarizer;

use rand::Rng;

use crate::corpus::{Document, SummaryText, TokenId};
use crate::error::{Error, Result};
use crate::masking::MaskedDocument;

pub use checkpoint::{
    load_checkpoint, read_manifest, save_checkpoint, BackendManifest, Checkpoint, ParamReader,
    ParamWriter, MANIFEST_FILE, PARAMS_FILE,
};
pub use cloze::{
    load_cloze, FrequencyBaselineCloze, OracleCloze, ShallowCloze, ShallowClozeConfig,
    SummaryOracleCloze,
};
pub use lm::{NgramLm, NgramLmConfig, UniformLm};
pub use summarizer::{PointerSummarizer, PointerSummarizerConfig};

const SUM_TOLERANCE: f64 = 1e-6;

/// A probability distribution over the vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenDistribution {
    probs: Vec<f64>,
}

impl TokenDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::Config("distribution has a negative or non-finite mass".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::Config(format!("distribution sums to {total}")));
        }
        Ok(TokenDistribution { probs })
    }

    /// Softmax over logits; `-inf` logits get zero mass.
    pub fn from_logits(logits: &[f64]) -> Self {
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut probs: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
        let total: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= total;
        }
        TokenDistribution { probs }
    }

    /// All mass on one token.
    pub fn point(size: usize, token: TokenId) -> Self {
        let mut probs = vec![0.0; size];
        probs[token as usize] = 1.0;
        TokenDistribution { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, token: TokenId) -> f64 {
        self.probs.get(token as usize).copied().unwrap_or(0.0)
    }

    pub fn log_prob(&self, token: TokenId) -> f64 {
        self.prob(token).ln()
    }

    /// Most likely token; the lowest id wins ties.
    pub fn argmax(&self) -> TokenId {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best as TokenId
    }

    /// Draws a token from the distribution sharpened or flattened by `temperature`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, temperature: f64) -> TokenId {
        let weights: Vec<f64> = if (temperature - 1.0).abs() < f64::EPSILON {
            self.probs.clone()
        } else {
            let inv = 1.0 / temperature;
            self.probs
                .iter()
                .map(|&p| if p > 0.0 { p.powf(inv) } else { 0.0 })
                .collect()
        };
        let total: f64 = weights.iter().sum();
        let mut u = rng.gen::<f64>() * total;
        let mut last = 0;
        for (i, &w) in weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            last = i;
            if u < w {
                return i as TokenId;
            }
            u -= w;
        }
        last as TokenId
    }
}

/// One sampled sequence and its advantage for a policy-gradient step.
#[derive(Debug, Clone, Copy)]
pub struct PolicyExample<'a> {
    pub document: &'a Document,
    /// Generated tokens including a trailing END when one was emitted.
    pub tokens: &'a [TokenId],
    pub advantage: f64,
}

/// Generative summarizer: reads the document, then emits one token at a time.
pub trait Summarizer: Send + Sync {
    fn backend_id(&self) -> String;

    fn vocab_size(&self) -> usize;

    fn end_token(&self) -> TokenId;

    /// Maximum of document tokens plus prefix tokens.
    fn context_limit(&self) -> usize;

    fn next_token_distribution(
        &self,
        document: &Document,
        prefix: &[TokenId],
    ) -> Result<TokenDistribution>;

    /// One gradient step on `(R̂ - R^s) * Σ log p(w_i)` averaged over `batch`,
    /// i.e. ascent on `advantage * Σ log p` scaled by `step_size`.
    fn apply_policy_update(&mut self, batch: &[PolicyExample<'_>], step_size: f64) -> Result<()> {
        let _ = (batch, step_size);
        Err(Error::NotTrainable(self.backend_id()))
    }
}

/// Fills every blank of a masked document given a summary.
pub trait ClozeModel: Send + Sync {
    fn backend_id(&self) -> String;

    /// Maximum of summary tokens + separator + masked document tokens.
    fn context_limit(&self) -> usize;

    /// One predicted token per blank, aligned with `masked.mask_indices()`.
    fn predict(&self, summary: &SummaryText, masked: &MaskedDocument) -> Result<Vec<TokenId>>;

    /// One update on the blank-prediction loss. Returns the summed loss over
    /// the blanks (measured before the update) and the number of blanks.
    fn train_example(
        &mut self,
        summary: &SummaryText,
        masked: &MaskedDocument,
        targets: &[TokenId],
        learning_rate: f64,
    ) -> Result<(f64, usize)> {
        let _ = (summary, masked, targets, learning_rate);
        Err(Error::NotTrainable(self.backend_id()))
    }
}

/// Left-to-right language model used for fluency.
pub trait LanguageModel: Send + Sync {
    fn backend_id(&self) -> String;

    /// `ln p(tokens[i] | tokens[..i])` for every position.
    fn token_log_probs(&self, tokens: &[TokenId]) -> Result<Vec<f64>>;
}

/// Errors when the cloze input `summary + SEP + masked` exceeds `limit`.
pub fn check_cloze_context(limit: usize, summary: &SummaryText, masked: &MaskedDocument) -> Result<()> {
    let required = summary.tokens.len() + 1 + masked.len();
    if required > limit {
        return Err(Error::ContextOverflow {
            required,
            limit,
            excess: required - limit,
        });
    }
    Ok(())
}

pub fn check_summarizer_context(limit: usize, document: &Document, prefix: &[TokenId]) -> Result<()> {
    let required = document.len() + prefix.len();
    if required > limit {
        return Err(Error::ContextOverflow {
            required,
            limit,
            excess: required - limit,
        });
    }
    Ok(())
}

/// Re-scores `Σ ln p(tokens[i] | tokens[..i], document)` under the summarizer.
pub fn sequence_log_prob<S: Summarizer + ?Sized>(
    summarizer: &S,
    document: &Document,
    tokens: &[TokenId],
) -> Result<f64> {
    let mut total = 0.0;
    for j in 0..tokens.len() {
        let dist = summarizer.next_token_distribution(document, &tokens[..j])?;
        total += dist.log_prob(tokens[j]);
    }
    Ok(total)
}

/// Single-example form of [`Summarizer::apply_policy_update`].
pub fn apply_policy_update<S: Summarizer + ?Sized>(
    summarizer: &mut S,
    document: &Document,
    tokens: &[TokenId],
    advantage: f64,
    step_size: f64,
) -> Result<()> {
    summarizer.apply_policy_update(
        &[PolicyExample {
            document,
            tokens,
            advantage,
        }],
        step_size,
    )
}
