//! Summary score and the three guard rails.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::backends::LanguageModel;
use crate::corpus::{Document, SummaryText};
use crate::coverage::CoverageScorer;
use crate::error::{Error, Result};
use crate::fluency::{fluency_score, FluencyConfig};

pub const DEFAULT_WINDOW: usize = 100;
pub const DEFAULT_FRAME_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rail {
    Repetition,
    NoEnd,
    FrameFilling,
}

impl Rail {
    pub fn as_str(self) -> &'static str {
        match self {
            Rail::Repetition => "repetition",
            Rail::NoEnd => "no_end",
            Rail::FrameFilling => "frame_filling",
        }
    }
}

impl FromStr for Rail {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "repetition" => Ok(Rail::Repetition),
            "no_end" => Ok(Rail::NoEnd),
            "frame_filling" => Ok(Rail::FrameFilling),
            other => Err(Error::Config(format!("unknown rail {other:?}"))),
        }
    }
}

impl fmt::Display for Rail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub type Rails = BTreeSet<Rail>;

/// Which summaries the frame-filling rail penalizes once the window
/// condition holds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameRule {
    /// Every summary scored while the condition holds.
    #[default]
    Window,
    /// Only summaries that place an over-threshold word at its position.
    Pattern,
}

impl FromStr for FrameRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "window" => Ok(FrameRule::Window),
            "pattern" => Ok(FrameRule::Pattern),
            other => Err(Error::Config(format!("unknown frame rule {other:?}"))),
        }
    }
}

impl fmt::Display for FrameRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FrameRule::Window => "window",
            FrameRule::Pattern => "pattern",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            alpha: 5.0,
            beta: 1.0,
            delta: 2.0,
        }
    }
}

/// How several simultaneous rails combine.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyStacking {
    /// `delta` per triggered rail.
    #[default]
    Stack,
    /// At most one `delta` however many rails trigger.
    Cap,
}

impl FromStr for PenaltyStacking {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stack" => Ok(PenaltyStacking::Stack),
            "cap" => Ok(PenaltyStacking::Cap),
            other => Err(Error::Config(format!("unknown rail stacking {other:?}"))),
        }
    }
}

impl fmt::Display for PenaltyStacking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PenaltyStacking::Stack => "stack",
            PenaltyStacking::Cap => "cap",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub coverage: f64,
    pub fluency: f64,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub rails_triggered: Rails,
    pub total: f64,
}

impl ScoreBreakdown {
    pub fn rails_label(&self) -> String {
        self.rails_triggered
            .iter()
            .map(|r| r.as_str())
            .collect::<Vec<_>>()
            .join("|")
    }
}

pub fn summary_score(
    coverage: f64,
    fluency: f64,
    rails: Rails,
    weights: Weights,
    stacking: PenaltyStacking,
) -> ScoreBreakdown {
    let penalties = match stacking {
        PenaltyStacking::Stack => rails.len(),
        PenaltyStacking::Cap => rails.len().min(1),
    } as f64;
    ScoreBreakdown {
        coverage,
        fluency,
        alpha: weights.alpha,
        beta: weights.beta,
        delta: weights.delta,
        total: weights.alpha * coverage + weights.beta * fluency - weights.delta * penalties,
        rails_triggered: rails,
    }
}

/// True iff some word 3-gram occurs at least twice.
pub fn has_repeated_trigram(summary: &SummaryText) -> bool {
    let mut seen = HashSet::new();
    summary.words.windows(3).any(|w| !seen.insert(w))
}

pub fn missing_end_token(summary: &SummaryText) -> bool {
    !summary.ended
}

/// Ring buffer of the most recent summaries with per-position word counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "WindowState", into = "WindowState")]
pub struct FrameWindow {
    capacity: usize,
    threshold: f64,
    buffer: VecDeque<Vec<String>>,
    counts: Vec<HashMap<String, usize>>,
}

#[derive(Serialize, Deserialize)]
struct WindowState {
    capacity: usize,
    threshold: f64,
    summaries: Vec<Vec<String>>,
}

impl From<WindowState> for FrameWindow {
    fn from(state: WindowState) -> Self {
        let mut window = FrameWindow::new(state.capacity, state.threshold);
        for s in state.summaries {
            window.push(s);
        }
        window
    }
}

impl From<FrameWindow> for WindowState {
    fn from(window: FrameWindow) -> Self {
        WindowState {
            capacity: window.capacity,
            threshold: window.threshold,
            summaries: window.buffer.into_iter().collect(),
        }
    }
}

impl Default for FrameWindow {
    fn default() -> Self {
        FrameWindow::new(DEFAULT_WINDOW, DEFAULT_FRAME_THRESHOLD)
    }
}

impl FrameWindow {
    pub fn new(capacity: usize, threshold: f64) -> Self {
        FrameWindow {
            capacity: capacity.max(1),
            threshold,
            buffer: VecDeque::with_capacity(capacity),
            counts: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.buffer.len() == self.capacity
    }

    pub fn push(&mut self, words: Vec<String>) {
        if self.is_full() {
            let old = self.buffer.pop_front().unwrap();
            for (p, w) in old.iter().enumerate() {
                let slot = self.counts[p].get_mut(w).unwrap();
                *slot -= 1;
                if *slot == 0 {
                    self.counts[p].remove(w);
                }
            }
        }
        if self.counts.len() < words.len() {
            self.counts.resize_with(words.len(), HashMap::new);
        }
        for (p, w) in words.iter().enumerate() {
            *self.counts[p].entry(w.clone()).or_insert(0) += 1;
        }
        self.buffer.push_back(words);
    }

    pub fn count(&self, position: usize, word: &str) -> usize {
        self.counts
            .get(position)
            .and_then(|c| c.get(word))
            .copied()
            .unwrap_or(0)
    }

    /// True iff the window is full and some word holds one position in more
    /// than `threshold` of the stored summaries.
    pub fn frame_filling_detected(&self) -> bool {
        if !self.is_full() {
            return false;
        }
        let limit = self.threshold * self.capacity as f64;
        self.counts
            .iter()
            .any(|pos| pos.values().any(|&n| n as f64 > limit))
    }

    /// True iff the window is full and `words` puts an over-threshold word
    /// at its position.
    pub fn matches_pattern(&self, words: &[String]) -> bool {
        if !self.is_full() {
            return false;
        }
        let limit = self.threshold * self.capacity as f64;
        words
            .iter()
            .enumerate()
            .any(|(p, w)| self.count(p, w) as f64 > limit)
    }

    /// Recomputes counts from the buffer; used by tests to check consistency.
    pub fn counts_consistent(&self) -> bool {
        let mut fresh = FrameWindow::new(self.capacity, self.threshold);
        for s in &self.buffer {
            fresh.push(s.clone());
        }
        let trim = |c: &[HashMap<String, usize>]| {
            let mut c = c.to_vec();
            while c.last().is_some_and(|m| m.is_empty()) {
                c.pop();
            }
            c
        };
        trim(&fresh.counts) == trim(&self.counts)
    }
}

/// Rails on one summary given the current window state.
pub fn detect_rails(summary: &SummaryText, window: Option<&FrameWindow>, rule: FrameRule) -> Rails {
    let mut rails = Rails::new();
    if has_repeated_trigram(summary) {
        rails.insert(Rail::Repetition);
    }
    if missing_end_token(summary) {
        rails.insert(Rail::NoEnd);
    }
    let frame = window.is_some_and(|w| match rule {
        FrameRule::Window => w.frame_filling_detected(),
        FrameRule::Pattern => w.matches_pattern(&summary.words),
    });
    if frame {
        rails.insert(Rail::FrameFilling);
    }
    rails
}

/// Coverage + fluency + guard rails for one frozen backend pair.
pub struct SummaryScorer<'a> {
    pub coverage: &'a CoverageScorer<'a>,
    pub lm: &'a dyn LanguageModel,
    pub fluency: FluencyConfig,
    pub weights: Weights,
    pub stacking: PenaltyStacking,
    pub frame_rule: FrameRule,
}

impl SummaryScorer<'_> {
    /// An empty summary has fluency 0.
    pub fn score(&self, doc: &Document, summary: &SummaryText, window: Option<&FrameWindow>) -> Result<ScoreBreakdown> {
        let coverage = self.coverage.score(doc, summary)?.normalized;
        let fluency = if summary.is_empty() {
            0.0
        } else {
            fluency_score(self.lm, summary, &self.fluency)?
        };
        Ok(summary_score(
            coverage,
            fluency,
            detect_rails(summary, window, self.frame_rule),
            self.weights,
            self.stacking,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn summary(text: &str, ended: bool) -> SummaryText {
        SummaryText {
            tokens: vec![0; text.split_whitespace().count()],
            words: text.split_whitespace().map(String::from).collect(),
            ended,
        }
    }

    fn words(text: &str) -> Vec<String> {
        text.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn trigram_examples() {
        assert!(has_repeated_trigram(&summary("a b c a b c", true)));
        assert!(!has_repeated_trigram(&summary("a b c d", true)));
        assert!(!has_repeated_trigram(&summary("a b", true)));
        assert!(!has_repeated_trigram(&summary("A b c a b c", true)));
    }

    #[test]
    fn end_token_examples() {
        assert!(!missing_end_token(&summary("a b c d e", true)));
        assert!(missing_end_token(&summary("a b c", false)));
        assert!(missing_end_token(&summary("", false)));
    }

    #[test]
    fn talks_in_second_position() {
        let mut w = FrameWindow::default();
        for i in 0..100 {
            let second = if i < 51 { "talks".to_string() } else { format!("w{i}") };
            w.push(vec![format!("x{i}"), second, format!("y{i}")]);
        }
        assert_eq!(w.count(1, "talks"), 51);
        assert!(w.frame_filling_detected());
    }

    #[test]
    fn fifty_of_hundred_is_not_enough() {
        let mut w = FrameWindow::default();
        for i in 0..100 {
            let word = if i % 2 == 0 { "a" } else { "b" };
            w.push(vec![word.to_string(); 5]);
        }
        assert!(!w.frame_filling_detected());
    }

    #[test]
    fn warm_up_window_is_inert() {
        let mut w = FrameWindow::default();
        for _ in 0..99 {
            w.push(words("same same same"));
        }
        assert!(!w.frame_filling_detected());
        w.push(words("other"));
        assert!(w.frame_filling_detected());
    }

    #[test]
    fn pattern_rule_only_hits_the_dominant_word() {
        let mut w = FrameWindow::default();
        for i in 0..100 {
            let second = if i < 60 { "talks".to_string() } else { format!("w{i}") };
            w.push(vec![format!("x{i}"), second]);
        }
        let with = summary("leader talks with envoy", true);
        let without = summary("leader meets envoy", true);
        assert!(detect_rails(&with, Some(&w), FrameRule::Pattern).contains(&Rail::FrameFilling));
        assert!(!detect_rails(&without, Some(&w), FrameRule::Pattern).contains(&Rail::FrameFilling));
        assert!(detect_rails(&without, Some(&w), FrameRule::Window).contains(&Rail::FrameFilling));
    }

    #[test]
    fn eviction_keeps_counts_consistent() {
        let mut w = FrameWindow::new(3, 0.5);
        for s in ["a b", "a c d", "b", "a b", "e"] {
            w.push(words(s));
        }
        assert!(w.counts_consistent());
        assert_eq!(w.count(0, "a"), 1);
        assert_eq!(w.len(), 3);
    }

    #[test]
    fn window_serde_round_trip() {
        let mut w = FrameWindow::new(4, 0.5);
        for s in ["a b", "c", "a d e"] {
            w.push(words(s));
        }
        let back: FrameWindow = serde_json::from_str(&serde_json::to_string(&w).unwrap()).unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn score_examples() {
        let w = Weights::default();
        let s = summary_score(0.4, 0.6, Rails::new(), w, PenaltyStacking::Stack);
        assert!((s.total - 2.6).abs() < 1e-12);
        let one: Rails = [Rail::NoEnd].into();
        let s = summary_score(0.4, 0.6, one, w, PenaltyStacking::Stack);
        assert!((s.total - 0.6).abs() < 1e-12);
        assert_eq!(summary_score(0.0, 0.0, Rails::new(), w, PenaltyStacking::Stack).total, 0.0);
    }

    #[test]
    fn stacking_switch() {
        let all: Rails = [Rail::NoEnd, Rail::Repetition, Rail::FrameFilling].into();
        let w = Weights::default();
        assert_eq!(summary_score(1.0, 1.0, all.clone(), w, PenaltyStacking::Stack).total, 0.0);
        assert_eq!(summary_score(1.0, 1.0, all.clone(), w, PenaltyStacking::Cap).total, 4.0);
        assert_eq!(summary_score(1.0, 1.0, all, w, PenaltyStacking::Stack).rails_label(), "repetition|no_end|frame_filling");
        assert_eq!("cap".parse::<PenaltyStacking>().unwrap(), PenaltyStacking::Cap);
    }

    #[test]
    fn identical_then_disjoint_windows() {
        let mut same = FrameWindow::default();
        for _ in 0..100 {
            same.push(words("a b c"));
        }
        same.push(words("x y z"));
        assert!(same.frame_filling_detected());

        let mut disjoint = FrameWindow::default();
        for i in 0..100 {
            disjoint.push(vec![format!("a{i}"), format!("b{i}")]);
        }
        assert!(!disjoint.frame_filling_detected());
    }

    proptest! {
        #[test]
        fn total_is_linear(c in -1.0f64..1.0, f in 0.0f64..1.0, bits in 0u8..8, delta in 0.1f64..5.0) {
            let mut rails = Rails::new();
            for (i, r) in [Rail::Repetition, Rail::NoEnd, Rail::FrameFilling].into_iter().enumerate() {
                if bits & (1 << i) != 0 {
                    rails.insert(r);
                }
            }
            let w = Weights { alpha: 5.0, beta: 1.0, delta };
            let n = rails.len() as f64;
            let s = summary_score(c, f, rails, w, PenaltyStacking::Stack);
            prop_assert_eq!(s.total, 5.0 * c + 1.0 * f - delta * n);
        }

        #[test]
        fn window_counts_track_buffer(seq in proptest::collection::vec(proptest::collection::vec(0u8..4, 0..6), 0..40)) {
            let mut w = FrameWindow::new(7, 0.5);
            for s in seq {
                w.push(s.iter().map(|x| format!("w{x}")).collect());
                prop_assert!(w.len() <= 7);
                prop_assert!(w.counts_consistent());
            }
        }
    }
}
