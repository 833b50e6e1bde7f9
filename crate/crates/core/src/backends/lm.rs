//! Word n-gram language models for fluency.

use std::collections::{BTreeMap, HashMap};

use super::checkpoint::{Checkpoint, ParamReader, ParamWriter};
use super::LanguageModel;
use crate::corpus::{TokenId, Vocab};
use crate::error::{Error, Result};

/// Assigns `1/V` to every token.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformLm {
    vocab_size: usize,
}

impl UniformLm {
    pub fn new(vocab_size: usize) -> Self {
        UniformLm { vocab_size }
    }
}

impl LanguageModel for UniformLm {
    fn backend_id(&self) -> String {
        format!("uniform-lm-{}", self.vocab_size)
    }

    fn token_log_probs(&self, tokens: &[TokenId]) -> Result<Vec<f64>> {
        Ok(vec![-(self.vocab_size as f64).ln(); tokens.len()])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NgramLmConfig {
    pub order: usize,
    /// Additive smoothing constant `k` in `(c(h,w) + k) / (c(h) + kV)`.
    pub smoothing: f64,
}

impl Default for NgramLmConfig {
    fn default() -> Self {
        NgramLmConfig {
            order: 2,
            smoothing: 0.1,
        }
    }
}

/// Additively smoothed word n-gram model. Histories are padded with START.
#[derive(Debug, Clone, PartialEq)]
pub struct NgramLm {
    order: usize,
    smoothing: f64,
    vocab_size: usize,
    start: TokenId,
    ngrams: HashMap<Vec<TokenId>, u64>,
    histories: HashMap<Vec<TokenId>, u64>,
}

impl NgramLm {
    pub fn new(vocab: &Vocab, config: &NgramLmConfig) -> Result<Self> {
        if config.order == 0 {
            return Err(Error::Config("n-gram order must be at least 1".into()));
        }
        if !(config.smoothing > 0.0) {
            return Err(Error::Config("n-gram smoothing must be positive".into()));
        }
        Ok(NgramLm {
            order: config.order,
            smoothing: config.smoothing,
            vocab_size: vocab.len(),
            start: vocab.start(),
            ngrams: HashMap::new(),
            histories: HashMap::new(),
        })
    }

    /// Builds a model from token sequences, one per text.
    pub fn fit<'a>(vocab: &Vocab, config: &NgramLmConfig, texts: impl IntoIterator<Item = &'a [TokenId]>) -> Result<Self> {
        let mut lm = Self::new(vocab, config)?;
        for tokens in texts {
            lm.observe(tokens);
        }
        Ok(lm)
    }

    pub fn observe(&mut self, tokens: &[TokenId]) {
        let padded = self.padded(tokens);
        let h = self.order - 1;
        for window in padded.windows(self.order) {
            *self.ngrams.entry(window.to_vec()).or_insert(0) += 1;
            *self.histories.entry(window[..h].to_vec()).or_insert(0) += 1;
        }
    }

    fn padded(&self, tokens: &[TokenId]) -> Vec<TokenId> {
        let mut padded = vec![self.start; self.order - 1];
        padded.extend_from_slice(tokens);
        padded
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn prob(&self, ngram: &[TokenId]) -> f64 {
        let c = self.ngrams.get(ngram).copied().unwrap_or(0) as f64;
        let h = self.histories.get(&ngram[..self.order - 1]).copied().unwrap_or(0) as f64;
        (c + self.smoothing) / (h + self.smoothing * self.vocab_size as f64)
    }
}

impl LanguageModel for NgramLm {
    fn backend_id(&self) -> String {
        format!("ngram-lm-{}", self.order)
    }

    fn token_log_probs(&self, tokens: &[TokenId]) -> Result<Vec<f64>> {
        Ok(self
            .padded(tokens)
            .windows(self.order)
            .map(|w| self.prob(w).ln())
            .collect())
    }
}

fn write_counts(out: &mut ParamWriter, counts: &HashMap<Vec<TokenId>, u64>) {
    let sorted: BTreeMap<_, _> = counts.iter().collect();
    out.u64(sorted.len() as u64);
    for (key, &n) in sorted {
        for &t in key {
            out.u64(t as u64);
        }
        out.u64(n);
    }
}

fn read_counts(input: &mut ParamReader<'_>, width: usize) -> Result<HashMap<Vec<TokenId>, u64>> {
    let n = input.usize()?;
    let mut counts = HashMap::new();
    for _ in 0..n {
        let key = (0..width)
            .map(|_| input.u64().map(|t| t as TokenId))
            .collect::<Result<Vec<_>>>()?;
        counts.insert(key, input.u64()?);
    }
    Ok(counts)
}

impl Checkpoint for NgramLm {
    const KIND: &'static str = "ngram-lm";

    fn param_count(&self) -> usize {
        self.ngrams.len() + self.histories.len()
    }

    fn encode_params(&self, out: &mut ParamWriter) {
        out.u64(self.order as u64);
        out.f64(self.smoothing);
        write_counts(out, &self.ngrams);
        write_counts(out, &self.histories);
    }

    fn decode_params(input: &mut ParamReader<'_>, vocab: &Vocab) -> Result<Self> {
        let order = input.usize()?;
        let smoothing = input.f64()?;
        let mut lm = NgramLm::new(vocab, &NgramLmConfig { order, smoothing })?;
        lm.ngrams = read_counts(input, order)?;
        lm.histories = read_counts(input, order - 1)?;
        Ok(lm)
    }
}
