//! Word-level ROUGE-1, ROUGE-2 and ROUGE-L F-1.

use std::collections::HashMap;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RougeScores {
    pub rouge1: f64,
    pub rouge2: f64,
    pub rouge_l: f64,
}

fn lowercase(words: &[String]) -> Vec<String> {
    words.iter().map(|w| w.to_lowercase()).collect()
}

fn f1(overlap: usize, ref_total: usize, hyp_total: usize) -> f64 {
    match (ref_total, hyp_total) {
        (0, 0) => 1.0,
        (0, _) | (_, 0) => 0.0,
        _ if overlap == 0 => 0.0,
        _ => {
            let p = overlap as f64 / hyp_total as f64;
            let r = overlap as f64 / ref_total as f64;
            2.0 * p * r / (p + r)
        }
    }
}

fn ngram_counts(words: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for g in words.windows(n) {
        *counts.entry(g).or_insert(0) += 1;
    }
    counts
}

/// Clipped n-gram overlap F-1.
pub fn rouge_n(reference: &[String], hypothesis: &[String], n: usize) -> f64 {
    let r = lowercase(reference);
    let h = lowercase(hypothesis);
    let rc = ngram_counts(&r, n);
    let hc = ngram_counts(&h, n);
    let overlap = hc
        .iter()
        .map(|(g, &c)| c.min(rc.get(g).copied().unwrap_or(0)))
        .sum();
    f1(overlap, r.len().saturating_sub(n - 1), h.len().saturating_sub(n - 1))
}

pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0; b.len() + 1];
    let mut cur = vec![0; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l(reference: &[String], hypothesis: &[String]) -> f64 {
    let r = lowercase(reference);
    let h = lowercase(hypothesis);
    f1(lcs_len(&r, &h), r.len(), h.len())
}

pub fn rouge_scores(reference: &[String], hypothesis: &[String]) -> RougeScores {
    RougeScores {
        rouge1: rouge_n(reference, hypothesis, 1),
        rouge2: rouge_n(reference, hypothesis, 2),
        rouge_l: rouge_l(reference, hypothesis),
    }
}
