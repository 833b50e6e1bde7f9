//! Template documents with planted keywords, for tests and demos.
//!
//! Each document belongs to one of a few categories. It plants a handful of
//! that category's keywords two or three times each, every occurrence right
//! after the keyword's cue word, inside sentences of shared filler words.
//! Cue words are shared by all categories. Planted keywords are rare across
//! the corpus and repeated within the document, so they top the tf-idf
//! ranking while cues and fillers stay below it.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::CorpusRecord;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub categories: usize,
    pub keywords_per_category: usize,
    pub cues: usize,
    pub fillers: usize,
    pub keywords_per_doc: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            categories: 5,
            keywords_per_category: 20,
            cues: 5,
            fillers: 60,
            keywords_per_doc: 5,
        }
    }
}

impl SyntheticConfig {
    pub fn keyword(&self, category: usize, i: usize) -> String {
        format!("k{category}x{i}")
    }

    /// Cue word that precedes keyword `i` of any category.
    pub fn cue(&self, i: usize) -> String {
        format!("c{}", i % self.cues)
    }

    pub fn filler(&self, i: usize) -> String {
        format!("f{i}")
    }

    /// Number of distinct words the generator can emit.
    pub fn word_count(&self) -> usize {
        self.categories * self.keywords_per_category + self.cues + self.fillers
    }
}

/// A generated document with the keywords planted in it.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDocument {
    pub record: CorpusRecord,
    pub category: usize,
    pub planted: Vec<String>,
}

pub fn generate(config: &SyntheticConfig, n_docs: usize, seed: u64) -> Vec<SyntheticDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_docs)
        .map(|d| {
            let category = rng.gen_range(0..config.categories);
            let mut chosen: Vec<usize> = (0..config.keywords_per_category).collect();
            chosen.shuffle(&mut rng);
            chosen.truncate(config.keywords_per_doc);
            let mut mentions: Vec<usize> = chosen
                .iter()
                .flat_map(|&k| std::iter::repeat_n(k, rng.gen_range(2..=3)))
                .collect();
            mentions.shuffle(&mut rng);
            let mut fillers: Vec<usize> = (0..config.fillers).collect();
            fillers.shuffle(&mut rng);
            let mut next_filler = fillers.into_iter().cycle();
            let mut words = Vec::new();
            for k in mentions {
                for _ in 0..rng.gen_range(2..=4) {
                    words.push(config.filler(next_filler.next().unwrap()));
                }
                words.push(config.cue(k));
                words.push(config.keyword(category, k));
                for _ in 0..rng.gen_range(1..=3) {
                    words.push(config.filler(next_filler.next().unwrap()));
                }
            }
            SyntheticDocument {
                record: CorpusRecord {
                    id: format!("syn-{d:04}"),
                    text: words.join(" "),
                    reference_summary: Some(
                        chosen.iter().map(|&k| config.keyword(category, k)).collect::<Vec<_>>().join(" "),
                    ),
                },
                category,
                planted: chosen.iter().map(|&k| config.keyword(category, k)).collect(),
            }
        })
        .collect()
}
