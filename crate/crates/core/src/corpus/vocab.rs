//! Word-level vocabulary shared by the reference backends.
//!
//! The vocabulary file holds one token per line and a token's id is its line
//! index. Reserved markers that are missing from the file are appended after
//! the last line, so a plain word list is a valid vocabulary file.

use std::collections::HashMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub type TokenId = u32;

pub const UNK: &str = "<unk>";
pub const BLANK: &str = "<blank>";
pub const SEP: &str = "<sep>";
pub const START: &str = "<start>";
pub const END: &str = "<end>";

const SPECIALS: [&str; 5] = [UNK, BLANK, SEP, START, END];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
    unk: TokenId,
    blank: TokenId,
    sep: TokenId,
    start: TokenId,
    end: TokenId,
}

impl Vocab {
    /// Builds a vocabulary from tokens in id order, appending any missing markers.
    pub fn new<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut list: Vec<String> = Vec::new();
        let mut index = HashMap::new();
        for tok in tokens {
            let tok = tok.into();
            if tok.is_empty() || index.contains_key(&tok) {
                continue;
            }
            index.insert(tok.clone(), list.len() as TokenId);
            list.push(tok);
        }
        for special in SPECIALS {
            if !index.contains_key(special) {
                index.insert(special.to_string(), list.len() as TokenId);
                list.push(special.to_string());
            }
        }
        let id = |s: &str| index[s];
        Vocab {
            unk: id(UNK),
            blank: id(BLANK),
            sep: id(SEP),
            start: id(START),
            end: id(END),
            tokens: list,
            index,
        }
    }

    /// Builds a vocabulary from texts: words ordered by descending frequency,
    /// ties broken lexicographically.
    pub fn from_texts<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for text in texts {
            for w in text.split_whitespace() {
                *counts.entry(w).or_default() += 1;
            }
        }
        let mut words: Vec<(&str, usize)> = counts.into_iter().collect();
        words.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        Vocab::new(words.into_iter().map(|(w, _)| w))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Vocab::new(text.lines().map(str::trim_end)))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = self.tokens.join("\n");
        out.push('\n');
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> &str {
        self.tokens.get(id as usize).map_or(UNK, String::as_str)
    }

    /// Maps whitespace-delimited words to ids; unknown words map to `<unk>`.
    pub fn tokenize(&self, text: &str) -> Vec<TokenId> {
        text.split_whitespace().map(|w| self.word_id(w)).collect()
    }

    pub fn word_id(&self, word: &str) -> TokenId {
        self.id(word).unwrap_or(self.unk)
    }

    pub fn detokenize(&self, ids: &[TokenId]) -> String {
        ids.iter()
            .map(|&id| self.token(id))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn unk(&self) -> TokenId {
        self.unk
    }
    pub fn blank(&self) -> TokenId {
        self.blank
    }
    pub fn sep(&self) -> TokenId {
        self.sep
    }
    pub fn start(&self) -> TokenId {
        self.start
    }
    pub fn end(&self) -> TokenId {
        self.end
    }

    pub fn is_special(&self, id: TokenId) -> bool {
        id == self.unk || id == self.blank || id == self.sep || id == self.start || id == self.end
    }

    /// SHA-256 over the newline-joined token list.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for tok in &self.tokens {
            hasher.update(tok.as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}
