//! Unsupervised abstractive summarization with a coverage + fluency reward.
//!
//! A summarizer is trained by self-critical policy gradient against a score
//! that rewards summaries which help a cloze model recover masked keywords
//! of the source document, penalized by language-model perplexity and three
//! rule-based guard rails.

pub mod analysis;
pub mod backends;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod coverage;
pub mod error;
pub mod fluency;
pub mod masking;
pub mod scoring;
pub mod synthetic;
pub mod training;

pub use error::{Error, Result};
