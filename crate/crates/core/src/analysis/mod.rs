//! Post-hoc evaluation: abstraction histograms and ROUGE.

mod rouge;
mod spans;

pub use rouge::{lcs_len, rouge_l, rouge_n, rouge_scores, RougeScores};
pub use spans::{
    abstraction_report, bucket_of, copied_spans, AbstractionReport, Segment, SpanDecomposition,
    BUCKET_LABELS,
};
