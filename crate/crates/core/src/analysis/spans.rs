//! Copied-span decomposition of a summary against its document.

use std::fmt::Write as _;

use serde::Serialize;

pub const BUCKET_LABELS: [&str; 6] = ["novel", "1", "2", "3-5", "6-10", "11+"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    Copied {
        summary_start: usize,
        doc_start: usize,
        len: usize,
    },
    Novel {
        summary_pos: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpanDecomposition {
    pub segments: Vec<Segment>,
}

/// Bucket index of a copied span of length `len`.
pub fn bucket_of(len: usize) -> usize {
    match len {
        0 => 0,
        1 => 1,
        2 => 2,
        3..=5 => 3,
        6..=10 => 4,
        _ => 5,
    }
}

impl SpanDecomposition {
    /// Segment counts per bucket; every novel word counts as one segment.
    pub fn bucket_counts(&self) -> [usize; 6] {
        let mut counts = [0; 6];
        for s in &self.segments {
            match s {
                Segment::Copied { len, .. } => counts[bucket_of(*len)] += 1,
                Segment::Novel { .. } => counts[0] += 1,
            }
        }
        counts
    }

    pub fn copied_lengths(&self) -> impl Iterator<Item = usize> + '_ {
        self.segments.iter().filter_map(|s| match s {
            Segment::Copied { len, .. } => Some(*len),
            Segment::Novel { .. } => None,
        })
    }

    /// Mean copied-span length, 0 without copied spans.
    pub fn average_copied_len(&self) -> f64 {
        let (sum, n) = self.copied_lengths().fold((0, 0), |(s, n), l| (s + l, n + 1));
        if n == 0 {
            0.0
        } else {
            sum as f64 / n as f64
        }
    }
}

fn lowercase(words: &[String]) -> Vec<String> {
    words.iter().map(|w| w.to_lowercase()).collect()
}

/// Greedy left-to-right decomposition: at each summary position take the
/// longest run that occurs verbatim in the document (earliest occurrence),
/// or a novel word when none does. Matching is lowercased.
pub fn copied_spans(doc_words: &[String], summary_words: &[String]) -> SpanDecomposition {
    let doc = lowercase(doc_words);
    let sum = lowercase(summary_words);
    let mut segments = Vec::new();
    let mut i = 0;
    while i < sum.len() {
        let mut best = (0, 0);
        for j in 0..doc.len() {
            let mut l = 0;
            while i + l < sum.len() && j + l < doc.len() && sum[i + l] == doc[j + l] {
                l += 1;
            }
            if l > best.0 {
                best = (l, j);
            }
        }
        if best.0 == 0 {
            segments.push(Segment::Novel { summary_pos: i });
            i += 1;
        } else {
            segments.push(Segment::Copied {
                summary_start: i,
                doc_start: best.1,
                len: best.0,
            });
            i += best.0;
        }
    }
    SpanDecomposition { segments }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbstractionReport {
    pub pairs: usize,
    pub segments: usize,
    /// Percent of segments in each bucket of [`BUCKET_LABELS`].
    pub percentages: [f64; 6],
    pub average_copied_len: f64,
}

/// Pools segments over all pairs.
pub fn abstraction_report<'a>(decompositions: impl IntoIterator<Item = &'a SpanDecomposition>) -> AbstractionReport {
    let mut counts = [0usize; 6];
    let (mut pairs, mut copied_sum, mut copied_n) = (0, 0, 0);
    for d in decompositions {
        pairs += 1;
        for (c, n) in counts.iter_mut().zip(d.bucket_counts()) {
            *c += n;
        }
        for l in d.copied_lengths() {
            copied_sum += l;
            copied_n += 1;
        }
    }
    let total: usize = counts.iter().sum();
    let mut percentages = [0.0; 6];
    if total > 0 {
        for (p, c) in percentages.iter_mut().zip(counts) {
            *p = 100.0 * c as f64 / total as f64;
        }
    }
    AbstractionReport {
        pairs,
        segments: total,
        percentages,
        average_copied_len: if copied_n == 0 { 0.0 } else { copied_sum as f64 / copied_n as f64 },
    }
}

impl AbstractionReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bucket,percent\n");
        for (label, p) in BUCKET_LABELS.iter().zip(self.percentages) {
            let _ = writeln!(out, "{label},{p:.2}");
        }
        let _ = writeln!(out, "average_copied_len,{:.2}", self.average_copied_len);
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} pairs, {} segments\n", self.pairs, self.segments);
        for (label, p) in BUCKET_LABELS.iter().zip(self.percentages) {
            let bar = "#".repeat((p / 2.0).round() as usize);
            let _ = writeln!(out, "{label:>6}  {p:>6.2}%  {bar}");
        }
        let _ = writeln!(out, "average copied span length: {:.2}", self.average_copied_len);
        out
    }
}
