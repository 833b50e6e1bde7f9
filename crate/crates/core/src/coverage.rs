//! Coverage: how many masked keywords a cloze model recovers given a summary.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Arc, RwLock};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::backends::ClozeModel;
use crate::corpus::{first_k_words, Document, SummaryText, TokenId, Vocab};
use crate::error::{Error, Result};
use crate::masking::{MaskedDocument, Masker};

pub const DEFAULT_PROXY_LEN: usize = 50;

/// A masked document with every blank replaced by a prediction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilledDocument {
    pub tokens: Vec<TokenId>,
    pub mask_indices: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub raw: f64,
    pub raw_empty: f64,
    pub normalized: f64,
}

impl CoverageResult {
    pub fn from_raw(raw: f64, raw_empty: f64) -> Self {
        CoverageResult {
            raw,
            raw_empty,
            normalized: raw - raw_empty,
        }
    }
}

pub fn fill_blanks(cloze: &dyn ClozeModel, masked: &MaskedDocument, summary: &SummaryText) -> Result<FilledDocument> {
    let mut tokens = masked.tokens().to_vec();
    if masked.blank_count() > 0 {
        let predictions = cloze.predict(summary, masked)?;
        if predictions.len() != masked.blank_count() {
            return Err(Error::LengthMismatch {
                original: masked.blank_count(),
                filled: predictions.len(),
            });
        }
        for (&i, t) in masked.mask_indices().iter().zip(predictions) {
            tokens[i] = t;
        }
    }
    Ok(FilledDocument {
        tokens,
        mask_indices: masked.mask_indices().to_vec(),
    })
}

/// Fraction of blanks whose prediction equals the original token; 0 with no blanks.
pub fn raw_coverage(original: &Document, filled: &FilledDocument) -> Result<f64> {
    if original.tokens().len() != filled.tokens.len() {
        return Err(Error::LengthMismatch {
            original: original.tokens().len(),
            filled: filled.tokens.len(),
        });
    }
    if filled.mask_indices.is_empty() {
        return Ok(0.0);
    }
    let correct = filled
        .mask_indices
        .iter()
        .filter(|&&i| original.tokens()[i] == filled.tokens[i])
        .count();
    Ok(correct as f64 / filled.mask_indices.len() as f64)
}

pub fn normalized_coverage(
    cloze: &dyn ClozeModel,
    doc: &Document,
    masked: &MaskedDocument,
    summary: &SummaryText,
) -> Result<CoverageResult> {
    let raw_empty = raw_coverage(doc, &fill_blanks(cloze, masked, &SummaryText::empty(true))?)?;
    let raw = raw_coverage(doc, &fill_blanks(cloze, masked, summary)?)?;
    Ok(CoverageResult::from_raw(raw, raw_empty))
}

struct CacheEntry {
    masked: Arc<MaskedDocument>,
    raw_empty: f64,
}

/// Scores coverage against one frozen cloze backend, caching each document's
/// mask and empty-summary baseline.
pub struct CoverageScorer<'a> {
    cloze: &'a dyn ClozeModel,
    masker: &'a Masker,
    vocab: &'a Vocab,
    cache: RwLock<HashMap<(String, String), Arc<CacheEntry>>>,
}

impl<'a> CoverageScorer<'a> {
    pub fn new(cloze: &'a dyn ClozeModel, masker: &'a Masker, vocab: &'a Vocab) -> Self {
        CoverageScorer {
            cloze,
            masker,
            vocab,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn cloze(&self) -> &dyn ClozeModel {
        self.cloze
    }

    fn entry(&self, doc: &Document) -> Result<Arc<CacheEntry>> {
        let key = (doc.id().to_string(), self.cloze.backend_id());
        if let Some(e) = self.cache.read().unwrap().get(&key) {
            return Ok(Arc::clone(e));
        }
        let masked = self.masker.mask(doc, self.vocab);
        let raw_empty = raw_coverage(doc, &fill_blanks(self.cloze, &masked, &SummaryText::empty(true))?)?;
        let entry = Arc::new(CacheEntry {
            masked: Arc::new(masked),
            raw_empty,
        });
        self.cache.write().unwrap().insert(key, Arc::clone(&entry));
        Ok(entry)
    }

    pub fn masked(&self, doc: &Document) -> Result<Arc<MaskedDocument>> {
        Ok(Arc::clone(&self.entry(doc)?.masked))
    }

    pub fn score(&self, doc: &Document, summary: &SummaryText) -> Result<CoverageResult> {
        let entry = self.entry(doc)?;
        let raw = raw_coverage(doc, &fill_blanks(self.cloze, &entry.masked, summary)?)?;
        Ok(CoverageResult::from_raw(raw, entry.raw_empty))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageTrainConfig {
    pub epochs: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub proxy_len: usize,
}

impl Default for CoverageTrainConfig {
    fn default() -> Self {
        CoverageTrainConfig {
            epochs: 5,
            seed: 0,
            learning_rate: 0.5,
            proxy_len: DEFAULT_PROXY_LEN,
        }
    }
}

/// Pretrains a cloze backend on `(masked D, D[:proxy_len])` pairs. Returns the
/// mean per-blank loss of each epoch. The learning rate decays as
/// `lr / sqrt(1 + epoch)`.
pub fn train_coverage(
    cloze: &mut dyn ClozeModel,
    docs: &[Document],
    masker: &Masker,
    vocab: &Vocab,
    config: &CoverageTrainConfig,
) -> Result<Vec<f64>> {
    if docs.is_empty() {
        return Err(Error::Empty("coverage training corpus"));
    }
    let examples: Vec<(MaskedDocument, SummaryText, Vec<TokenId>)> = docs
        .iter()
        .map(|doc| {
            let masked = masker.mask(doc, vocab);
            let targets = masked.mask_indices().iter().map(|&i| doc.tokens()[i]).collect();
            (masked, first_k_words(doc, config.proxy_len), targets)
        })
        .filter(|(m, _, _)| m.blank_count() > 0)
        .collect();
    if examples.is_empty() && config.epochs > 0 {
        return Err(Error::Empty("coverage training corpus with at least one blank"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let lr = config.learning_rate / (1.0 + epoch as f64).sqrt();
        let (mut total, mut count) = (0.0, 0usize);
        for &i in &order {
            let (masked, proxy, targets) = &examples[i];
            let (loss, n) = cloze.train_example(proxy, masked, targets, lr)?;
            total += loss;
            count += n;
        }
        history.push(if count == 0 { 0.0 } else { total / count as f64 });
    }
    Ok(history)
}

/// Fraction of blanks predicted correctly when the cloze model sees `summary_for(doc)`.
pub fn blank_accuracy(
    cloze: &dyn ClozeModel,
    docs: &[Document],
    masker: &Masker,
    vocab: &Vocab,
    summary_for: impl Fn(&Document) -> SummaryText,
) -> Result<f64> {
    let (mut correct, mut total) = (0usize, 0usize);
    for doc in docs {
        let masked = masker.mask(doc, vocab);
        let filled = fill_blanks(cloze, &masked, &summary_for(doc))?;
        correct += filled
            .mask_indices
            .iter()
            .filter(|&&i| filled.tokens[i] == doc.tokens()[i])
            .count();
        total += masked.blank_count();
    }
    Ok(if total == 0 { 0.0 } else { correct as f64 / total as f64 })
}

/// Pearson correlation; `None` with fewer than two points or zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (dx, dy) = (xs[i] - mx, ys[i] - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReportRow {
    pub group: String,
    pub n: usize,
    pub mean_len: f64,
    pub raw: f64,
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub rows: Vec<CoverageReportRow>,
    /// Correlation between summary length and raw coverage over every pair.
    pub length_raw_correlation: Option<f64>,
}

/// One named group of `(document, summary)` pairs.
pub type PairGroup = (String, Vec<(Document, SummaryText)>);

pub fn dataset_coverage_report(scorer: &CoverageScorer<'_>, groups: &[PairGroup]) -> Result<CoverageReport> {
    let mut rows = Vec::with_capacity(groups.len());
    let (mut lens, mut raws) = (Vec::new(), Vec::new());
    for (name, pairs) in groups {
        let (mut len_sum, mut raw_sum, mut norm_sum) = (0.0, 0.0, 0.0);
        for (doc, summary) in pairs {
            let result = scorer.score(doc, summary)?;
            len_sum += summary.len() as f64;
            raw_sum += result.raw;
            norm_sum += result.normalized;
            lens.push(summary.len() as f64);
            raws.push(result.raw);
        }
        let n = pairs.len().max(1) as f64;
        rows.push(CoverageReportRow {
            group: name.clone(),
            n: pairs.len(),
            mean_len: len_sum / n,
            raw: raw_sum / n,
            normalized: norm_sum / n,
        });
    }
    Ok(CoverageReport {
        rows,
        length_raw_correlation: pearson(&lens, &raws),
    })
}

impl CoverageReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("group,n,mean_len,raw,normalized\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{:.2},{:.3},{:.3}", r.group, r.n, r.mean_len, r.raw, r.normalized);
        }
        out
    }

    pub fn to_text(&self) -> String {
        let width = self.rows.iter().map(|r| r.group.len()).max().unwrap_or(0).max(5);
        let mut out = format!(
            "{:<width$}  {:>6}  {:>8}  {:>6}  {:>10}\n",
            "group", "n", "mean_len", "raw", "normalized"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:>6}  {:>8.1}  {:>6.3}  {:>10.3}",
                r.group, r.n, r.mean_len, r.raw, r.normalized
            );
        }
        match self.length_raw_correlation {
            Some(c) => {
                let _ = writeln!(out, "length/raw correlation: {c:.2}");
            }
            None => out.push_str("length/raw correlation: n/a\n"),
        }
        out
    }
}
