//! Keyword selection by tf-idf and document masking.
//!
//! Terms are lowercased whitespace words. Inverse document frequency uses the
//! smoothed form `ln((1 + N) / (1 + df)) + 1`; document vectors are raw term
//! counts scaled by idf and L2-normalized. A term that never occurred in the
//! fitting sample gets the `df = 0` value of the same formula.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, TokenId, Vocab};
use crate::error::{Error, Result};

/// Default number of masked keywords per document.
pub const DEFAULT_K: usize = 15;

/// Default size of the random fitting sample.
pub const DEFAULT_FIT_SAMPLE: usize = 5000;

pub type Keywords = BTreeSet<String>;

#[derive(Debug, Clone, PartialEq)]
pub struct TfIdfModel {
    vocabulary: BTreeMap<String, usize>,
    idf: Vec<f64>,
    n_docs: usize,
}

#[derive(Serialize, Deserialize)]
struct TfIdfFile {
    n_docs: usize,
    idf: BTreeMap<String, f64>,
}

fn lowercase_terms(doc: &Document) -> impl Iterator<Item = String> + '_ {
    doc.words().iter().map(|w| w.to_lowercase())
}

fn term_counts(doc: &Document) -> HashMap<String, usize> {
    let mut counts = HashMap::new();
    for term in lowercase_terms(doc) {
        *counts.entry(term).or_insert(0) += 1;
    }
    counts
}

fn smooth_idf(n_docs: usize, df: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// Fits document frequencies on `sample`.
pub fn fit_tfidf(sample: &[Document]) -> Result<TfIdfModel> {
    if sample.is_empty() {
        return Err(Error::Empty("tf-idf fitting sample"));
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for doc in sample {
        for term in term_counts(doc).into_keys() {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    let n_docs = sample.len();
    let mut vocabulary = BTreeMap::new();
    let mut idf = Vec::with_capacity(df.len());
    for (i, (term, count)) in df.into_iter().enumerate() {
        vocabulary.insert(term, i);
        idf.push(smooth_idf(n_docs, count));
    }
    Ok(TfIdfModel {
        vocabulary,
        idf,
        n_docs,
    })
}

/// Draws up to `n` documents uniformly without replacement, keeping corpus order.
pub fn sample_documents<R: Rng>(docs: &[Document], n: usize, rng: &mut R) -> Vec<Document> {
    if docs.len() <= n {
        return docs.to_vec();
    }
    let mut picked = sample(rng, docs.len(), n).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| docs[i].clone()).collect()
}

impl TfIdfModel {
    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn vocabulary_len(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn idf(&self, term: &str) -> f64 {
        match self.vocabulary.get(term) {
            Some(&i) => self.idf[i],
            None => smooth_idf(self.n_docs, 0),
        }
    }

    /// Unnormalized tf-idf per distinct lowercased term of `doc`.
    pub fn raw_scores(&self, doc: &Document) -> Vec<(String, f64)> {
        term_counts(doc)
            .into_iter()
            .map(|(term, tf)| {
                let score = tf as f64 * self.idf(&term);
                (term, score)
            })
            .collect()
    }

    /// L2-normalized tf-idf vector of `doc`, sorted by term.
    pub fn transform(&self, doc: &Document) -> Vec<(String, f64)> {
        let mut scores = self.raw_scores(doc);
        let norm = scores.iter().map(|(_, s)| s * s).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, s) in &mut scores {
                *s /= norm;
            }
        }
        scores.sort_by(|a, b| a.0.cmp(&b.0));
        scores
    }

    /// Terms of `doc` ranked by decreasing tf-idf, ties in lexicographic order.
    pub fn ranked_terms(&self, doc: &Document) -> Vec<(String, f64)> {
        let mut scores = self.raw_scores(doc);
        scores.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        scores
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = TfIdfFile {
            n_docs: self.n_docs,
            idf: self
                .vocabulary
                .iter()
                .map(|(t, &i)| (t.clone(), self.idf[i]))
                .collect(),
        };
        let json = serde_json::to_string_pretty(&file)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: TfIdfFile = serde_json::from_str(&text)?;
        if file.n_docs == 0 {
            return Err(Error::Empty("tf-idf model with zero documents"));
        }
        let mut vocabulary = BTreeMap::new();
        let mut idf = Vec::with_capacity(file.idf.len());
        for (i, (term, weight)) in file.idf.into_iter().enumerate() {
            if !(weight >= 0.0) {
                return Err(Error::Config(format!("negative idf for {term:?}")));
            }
            vocabulary.insert(term, i);
            idf.push(weight);
        }
        Ok(TfIdfModel {
            vocabulary,
            idf,
            n_docs: file.n_docs,
        })
    }
}

/// The `k` distinct lowercased terms of `doc` with highest tf-idf.
pub fn select_keywords(doc: &Document, model: &TfIdfModel, k: usize) -> Keywords {
    model
        .ranked_terms(doc)
        .into_iter()
        .take(k)
        .map(|(t, _)| t)
        .collect()
}

/// A document with every occurrence of its keywords replaced by BLANK.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedDocument {
    tokens: Vec<TokenId>,
    mask_indices: Vec<usize>,
    keywords: Keywords,
    source_id: String,
}

impl MaskedDocument {
    pub fn tokens(&self) -> &[TokenId] {
        &self.tokens
    }

    pub fn mask_indices(&self) -> &[usize] {
        &self.mask_indices
    }

    pub fn keywords(&self) -> &Keywords {
        &self.keywords
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn blank_count(&self) -> usize {
        self.mask_indices.len()
    }
}

/// Replaces every word whose lowercased form is in `keywords` with BLANK.
/// Keywords absent from the document are ignored.
pub fn apply_mask(doc: &Document, keywords: &Keywords, vocab: &Vocab) -> MaskedDocument {
    let blank = vocab.blank();
    let mut tokens = doc.tokens().to_vec();
    let mut mask_indices = Vec::new();
    for (i, word) in doc.words().iter().enumerate() {
        if keywords.contains(&word.to_lowercase()) {
            tokens[i] = blank;
            mask_indices.push(i);
        }
    }
    MaskedDocument {
        tokens,
        mask_indices,
        keywords: keywords.clone(),
        source_id: doc.id().to_string(),
    }
}

/// Extra keywords to mask for a document, e.g. every number in financial text.
pub type KeywordHook = Arc<dyn Fn(&Document) -> Vec<String> + Send + Sync>;

/// Keyword hook that masks every word containing a digit.
pub fn mask_numbers() -> KeywordHook {
    Arc::new(|doc: &Document| {
        doc.words()
            .iter()
            .filter(|w| w.chars().any(|c| c.is_ascii_digit()))
            .map(|w| w.to_lowercase())
            .collect()
    })
}

/// Fitted tf-idf model plus masking parameters.
#[derive(Clone)]
pub struct Masker {
    model: TfIdfModel,
    k: usize,
    hook: Option<KeywordHook>,
}

impl fmt::Debug for Masker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Masker")
            .field("k", &self.k)
            .field("n_docs", &self.model.n_docs)
            .field("hook", &self.hook.is_some())
            .finish()
    }
}

impl Masker {
    pub fn new(model: TfIdfModel, k: usize) -> Self {
        Masker {
            model,
            k,
            hook: None,
        }
    }

    pub fn with_hook(mut self, hook: KeywordHook) -> Self {
        self.hook = Some(hook);
        self
    }

    pub fn model(&self) -> &TfIdfModel {
        &self.model
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn keywords(&self, doc: &Document) -> Keywords {
        let mut kws = select_keywords(doc, &self.model, self.k);
        if let Some(hook) = &self.hook {
            kws.extend(hook(doc).into_iter().map(|w| w.to_lowercase()));
        }
        kws
    }

    pub fn mask(&self, doc: &Document, vocab: &Vocab) -> MaskedDocument {
        apply_mask(doc, &self.keywords(doc), vocab)
    }
}
