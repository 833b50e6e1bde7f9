//! Document ingestion, tokenization, and first-k-word summaries.

mod vocab;

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use vocab::{TokenId, Vocab, BLANK, END, SEP, START, UNK};

/// An immutable tokenized source document.
///
/// Token ids come from the word-level reference vocabulary, so `tokens[i]` is
/// always the id of `words[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    id: String,
    raw_text: String,
    tokens: Vec<TokenId>,
    words: Vec<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>, vocab: &Vocab) -> Self {
        let raw_text = text.into();
        let words: Vec<String> = raw_text.split_whitespace().map(str::to_string).collect();
        let tokens = words.iter().map(|w| vocab.word_id(w)).collect();
        Document {
            id: id.into(),
            raw_text,
            tokens,
            words,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn raw_text(&self) -> &str {
        &self.raw_text
    }

    pub fn tokens(&self) -> &[TokenId] {
        &self.tokens
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Keeps the first `max_words` words. Returns a clone when already short enough.
    pub fn truncated(&self, max_words: usize) -> Document {
        if self.words.len() <= max_words {
            return self.clone();
        }
        let words = self.words[..max_words].to_vec();
        Document {
            id: self.id.clone(),
            raw_text: words.join(" "),
            tokens: self.tokens[..max_words].to_vec(),
            words,
        }
    }
}

/// A summary as seen by the scorers: words, their ids, and whether the
/// generator emitted the END marker.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SummaryText {
    pub tokens: Vec<TokenId>,
    pub words: Vec<String>,
    pub ended: bool,
}

impl SummaryText {
    pub fn from_text(text: &str, vocab: &Vocab, ended: bool) -> Self {
        let words: Vec<String> = text.split_whitespace().map(str::to_string).collect();
        let tokens = words.iter().map(|w| vocab.word_id(w)).collect();
        SummaryText {
            tokens,
            words,
            ended,
        }
    }

    pub fn from_tokens(tokens: Vec<TokenId>, vocab: &Vocab, ended: bool) -> Self {
        let words = tokens.iter().map(|&t| vocab.token(t).to_string()).collect();
        SummaryText {
            tokens,
            words,
            ended,
        }
    }

    pub fn empty(ended: bool) -> Self {
        SummaryText {
            ended,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn text(&self) -> String {
        self.words.join(" ")
    }
}

/// The first `min(k, |words|)` words of a document, marked as ended.
pub fn first_k_words(doc: &Document, k: usize) -> SummaryText {
    let n = k.min(doc.len());
    SummaryText {
        tokens: doc.tokens[..n].to_vec(),
        words: doc.words[..n].to_vec(),
        ended: true,
    }
}

/// One JSON-lines record of the corpus file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_summary: Option<String>,
}

/// Reads corpus records in file order. Blank lines are skipped.
pub fn read_records(path: &Path) -> Result<Vec<CorpusRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_records(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn parse_records(reader: impl BufRead) -> Result<Vec<CorpusRecord>> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io("<corpus>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| Error::Record {
                line: line_no,
                message: format!("malformed json: {e}"),
            })?;
        let field = |name: &str| -> Result<Option<String>> {
            match value.get(name) {
                None | Some(serde_json::Value::Null) => Ok(None),
                Some(serde_json::Value::String(s)) => Ok(Some(s.clone())),
                Some(_) => Err(Error::Record {
                    line: line_no,
                    message: format!("field {name} is not a string"),
                }),
            }
        };
        if !value.is_object() {
            return Err(Error::Record {
                line: line_no,
                message: "record is not an object".into(),
            });
        }
        let id = field("id")?.ok_or_else(|| Error::Record {
            line: line_no,
            message: "missing id".into(),
        })?;
        let text = field("text")?.ok_or_else(|| Error::Record {
            line: line_no,
            message: "missing text".into(),
        })?;
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId { id, line: line_no });
        }
        records.push(CorpusRecord {
            id,
            text,
            reference_summary: field("reference_summary")?,
        });
    }
    Ok(records)
}

/// Documents in file order. Reference summaries are held apart from the
/// documents and are only reachable through [`Corpus::reference`].
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub documents: Vec<Document>,
    references: BTreeMap<String, String>,
}

impl Corpus {
    pub fn from_records(records: Vec<CorpusRecord>, vocab: &Vocab) -> Self {
        let mut references = BTreeMap::new();
        let documents = records
            .into_iter()
            .map(|r| {
                if let Some(reference) = r.reference_summary {
                    references.insert(r.id.clone(), reference);
                }
                Document::new(r.id, r.text, vocab)
            })
            .collect();
        Corpus {
            documents,
            references,
        }
    }

    pub fn reference(&self, id: &str) -> Option<&str> {
        self.references.get(id).map(String::as_str)
    }
}

pub fn load_corpus(path: &Path, vocab: &Vocab) -> Result<Corpus> {
    Ok(Corpus::from_records(read_records(path)?, vocab))
}

pub fn write_records(path: &Path, records: &[CorpusRecord]) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
