//! Fluency: language-model log-perplexity scaled linearly into `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::backends::LanguageModel;
use crate::corpus::{first_k_words, Document, SummaryText};
use crate::error::{Error, Result};

pub const DEFAULT_LOW_PERCENTILE: f64 = 5.0;
pub const DEFAULT_HIGH_PERCENTILE: f64 = 95.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluencyConfig {
    lp_low: f64,
    lp_high: f64,
}

impl FluencyConfig {
    pub fn new(lp_low: f64, lp_high: f64) -> Result<Self> {
        if !(lp_high > lp_low) || !lp_low.is_finite() || !lp_high.is_finite() {
            return Err(Error::DegenerateCalibration { lp_low, lp_high });
        }
        Ok(FluencyConfig { lp_low, lp_high })
    }

    pub fn lp_low(&self) -> f64 {
        self.lp_low
    }

    pub fn lp_high(&self) -> f64 {
        self.lp_high
    }

    /// `1 - (lp - lp_low) / (lp_high - lp_low)`, clamped to `[0, 1]`.
    pub fn scale(&self, log_perplexity: f64) -> f64 {
        (1.0 - (log_perplexity - self.lp_low) / (self.lp_high - self.lp_low)).clamp(0.0, 1.0)
    }
}

/// Mean per-token negative log-probability of the summary words.
pub fn log_perplexity(lm: &dyn LanguageModel, summary: &SummaryText) -> Result<f64> {
    if summary.is_empty() {
        return Err(Error::Empty("summary"));
    }
    let lps = lm.token_log_probs(&summary.tokens)?;
    Ok(-lps.iter().sum::<f64>() / lps.len() as f64)
}

pub fn fluency_score(lm: &dyn LanguageModel, summary: &SummaryText, cfg: &FluencyConfig) -> Result<f64> {
    Ok(cfg.scale(log_perplexity(lm, summary)?))
}

/// Linear-interpolation percentile of sorted data, `p` in `[0, 100]`.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = (p / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Picks `lp_low` / `lp_high` as percentiles of the log-perplexities of
/// each document's first `snippet_len` words.
pub fn calibrate_fluency(
    lm: &dyn LanguageModel,
    docs: &[Document],
    snippet_len: usize,
    low_pct: f64,
    high_pct: f64,
) -> Result<FluencyConfig> {
    let mut lps = Vec::with_capacity(docs.len());
    for doc in docs {
        let snippet = first_k_words(doc, snippet_len);
        if !snippet.is_empty() {
            lps.push(log_perplexity(lm, &snippet)?);
        }
    }
    if lps.is_empty() {
        return Err(Error::Empty("calibration corpus"));
    }
    lps.sort_by(f64::total_cmp);
    FluencyConfig::new(percentile(&lps, low_pct), percentile(&lps, high_pct))
}
