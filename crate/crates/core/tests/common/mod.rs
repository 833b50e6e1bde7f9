//! Brute-force oracles and generators shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use summary_loop::analysis::{bucket_of, Segment, SpanDecomposition};
use summary_loop::corpus::{Document, Vocab};
use summary_loop::masking::{fit_tfidf, Masker};

pub fn words(text: &str) -> Vec<String> {
    text.split_whitespace().map(String::from).collect()
}

/// Random corpus of `n_docs` documents over a vocabulary of `vocab_size`
/// words with a skewed word distribution, so ranks have ties and gaps.
pub fn random_corpus(rng: &mut ChaCha8Rng, n_docs: usize, vocab_size: usize) -> Vec<String> {
    (0..n_docs)
        .map(|_| {
            let len = rng.gen_range(1..=40);
            (0..len)
                .map(|_| {
                    let r: f64 = rng.gen();
                    let w = ((r * r) * vocab_size as f64) as usize;
                    if rng.gen_bool(0.1) {
                        format!("W{w}")
                    } else {
                        format!("w{w}")
                    }
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

pub fn build_docs(texts: &[String]) -> (Vocab, Vec<Document>) {
    let vocab = Vocab::from_texts(texts.iter().map(String::as_str));
    let docs = texts
        .iter()
        .enumerate()
        .map(|(i, t)| Document::new(format!("d{i}"), t.as_str(), &vocab))
        .collect();
    (vocab, docs)
}

/// Top-`k` lowercased terms by `tf * (ln((1+N)/(1+df)) + 1)`, computed
/// from scratch for every term; ties broken lexicographically.
pub fn brute_force_keywords(texts: &[String], doc: usize, k: usize) -> BTreeSet<String> {
    let lower: Vec<Vec<String>> = texts
        .iter()
        .map(|t| t.split_whitespace().map(|w| w.to_lowercase()).collect())
        .collect();
    let n = lower.len() as f64;
    let terms: BTreeSet<&String> = lower[doc].iter().collect();
    let mut scored: Vec<(String, f64)> = terms
        .into_iter()
        .map(|t| {
            let tf = lower[doc].iter().filter(|w| *w == t).count() as f64;
            let df = lower.iter().filter(|d| d.contains(t)).count() as f64;
            (t.clone(), tf * (((1.0 + n) / (1.0 + df)).ln() + 1.0))
        })
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    scored.into_iter().take(k).map(|(t, _)| t).collect()
}

/// Bucket histogram from the dynamic-programming table
/// `ext[i][j] = |longest common run starting at summary i, doc j|`,
/// walked left to right taking the longest run at each position.
pub fn dp_bucket_counts(doc: &[String], summary: &[String]) -> [usize; 6] {
    let d: Vec<String> = doc.iter().map(|w| w.to_lowercase()).collect();
    let s: Vec<String> = summary.iter().map(|w| w.to_lowercase()).collect();
    let mut ext = vec![vec![0usize; d.len() + 1]; s.len() + 1];
    for i in (0..s.len()).rev() {
        for j in (0..d.len()).rev() {
            if s[i] == d[j] {
                ext[i][j] = ext[i + 1][j + 1] + 1;
            }
        }
    }
    let mut counts = [0; 6];
    let mut i = 0;
    while i < s.len() {
        let best = ext[i].iter().copied().max().unwrap_or(0);
        if best == 0 {
            counts[0] += 1;
            i += 1;
        } else {
            counts[bucket_of(best)] += 1;
            i += best;
        }
    }
    counts
}

/// Segments tile the summary in order and each copied segment is a verbatim
/// (lowercased) document run that cannot be extended by one more word
/// anywhere in the document; novel words do not occur in the document.
pub fn check_decomposition(doc: &[String], summary: &[String], d: &SpanDecomposition) -> Result<(), String> {
    let doc: Vec<String> = doc.iter().map(|w| w.to_lowercase()).collect();
    let sum: Vec<String> = summary.iter().map(|w| w.to_lowercase()).collect();
    let occurs = |run: &[String]| doc.windows(run.len()).any(|w| w == run);
    let mut pos = 0;
    for seg in &d.segments {
        match *seg {
            Segment::Copied { summary_start, doc_start, len } => {
                if summary_start != pos || len == 0 {
                    return Err(format!("gap or empty segment at {pos}"));
                }
                if sum[pos..pos + len] != doc[doc_start..doc_start + len] {
                    return Err(format!("segment at {pos} is not a document run"));
                }
                if pos + len < sum.len() && occurs(&sum[pos..pos + len + 1]) {
                    return Err(format!("segment at {pos} is not maximal"));
                }
                pos += len;
            }
            Segment::Novel { summary_pos } => {
                if summary_pos != pos || doc.contains(&sum[pos]) {
                    return Err(format!("bad novel word at {pos}"));
                }
                pos += 1;
            }
        }
    }
    if pos != sum.len() {
        return Err(format!("segments cover {pos} of {} words", sum.len()));
    }
    Ok(())
}

/// A document and a summary that copies runs of random length from it,
/// mixed with novel words.
pub fn random_span_pair(rng: &mut ChaCha8Rng, max_summary: usize) -> (Vec<String>, Vec<String>) {
    let vocab = rng.gen_range(3..30);
    let doc: Vec<String> = (0..rng.gen_range(1..80))
        .map(|_| format!("w{}", rng.gen_range(0..vocab)))
        .collect();
    let target = rng.gen_range(0..=max_summary);
    let mut summary = Vec::new();
    while summary.len() < target {
        if rng.gen_bool(0.3) {
            summary.push(format!("n{}", rng.gen_range(0..5)));
        } else {
            let start = rng.gen_range(0..doc.len());
            let len = rng.gen_range(1..=12).min(doc.len() - start).min(target - summary.len());
            summary.extend_from_slice(&doc[start..start + len]);
        }
    }
    (doc, summary)
}

/// Corpus in which keyword `i` always sits between its own neighbours
/// `l{i}` and `r{i}`, so no two keywords share a blank context. The masker
/// blanks exactly the keywords.
pub struct DisjointContextCorpus {
    pub vocab: Vocab,
    pub docs: Vec<Document>,
    pub masker: Masker,
    pub keywords: Vec<String>,
}

pub fn disjoint_context_corpus(seed: u64, n_docs: usize, n_keywords: usize) -> DisjointContextCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keywords: Vec<String> = (0..n_keywords).map(|i| format!("k{i}")).collect();
    let texts: Vec<String> = (0..n_docs)
        .map(|_| {
            let mut chosen: Vec<usize> = (0..n_keywords).collect();
            chosen.shuffle(&mut rng);
            chosen.truncate(rng.gen_range(1..=n_keywords.min(6)));
            let mut out = Vec::new();
            for &i in &chosen {
                for _ in 0..rng.gen_range(1..=2) {
                    out.push(format!("s{}", rng.gen_range(0..4)));
                    out.push(format!("l{i} k{i} r{i}"));
                }
            }
            out.join(" ")
        })
        .collect();
    let (vocab, docs) = build_docs(&texts);
    let hook = Arc::new(|d: &Document| d.words().iter().filter(|w| w.starts_with('k')).cloned().collect());
    let masker = Masker::new(fit_tfidf(&docs).unwrap(), 0).with_hook(hook);
    DisjointContextCorpus {
        vocab,
        docs,
        masker,
        keywords,
    }
}

/// Three hand-counted ROUGE cases: (reference, hypothesis, R-1, R-2, R-L).
pub fn rouge_hand_table() -> [(&'static str, &'static str, f64, f64, f64); 3] {
    [
        // unigrams 5/6 both ways; bigrams 3 of 5; LCS "the cat on the mat"
        ("the cat sat on the mat", "the cat lay on the mat", 5.0 / 6.0, 0.6, 5.0 / 6.0),
        // P = 1, R = 1/2; no shared bigram; LCS "a c"
        ("a b c d", "a c", 2.0 / 3.0, 0.0, 2.0 / 3.0),
        // P = 4/6, R = 1; one shared bigram "the man" (P 1/5, R 1/3); LCS 2 of 6 and 4
        ("police arrested the man", "the man was arrested by police", 0.8, 0.25, 0.4),
    ]
}

pub fn random_words(rng: &mut ChaCha8Rng, max_len: usize, vocab: usize) -> Vec<String> {
    (0..rng.gen_range(0..=max_len))
        .map(|_| format!("w{}", rng.gen_range(0..vocab)))
        .collect()
}
