//! Cloze backends that fill masked keywords from a summary.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::checkpoint::{load_checkpoint, read_manifest, Checkpoint, ParamReader, ParamWriter};
use super::{check_cloze_context, ClozeModel, TokenDistribution};
use crate::corpus::{Document, SummaryText, TokenId, Vocab};
use crate::error::{Error, Result};
use crate::masking::{MaskedDocument, Masker};

/// Nearest visible tokens to the left and right of position `i`, with START
/// and END standing in for the document boundaries.
pub(crate) fn blank_context(masked: &MaskedDocument, i: usize, blank: TokenId, start: TokenId, end: TokenId) -> (TokenId, TokenId) {
    let toks = masked.tokens();
    let left = toks[..i].iter().rev().find(|&&t| t != blank).copied().unwrap_or(start);
    let right = toks[i + 1..].iter().find(|&&t| t != blank).copied().unwrap_or(end);
    (left, right)
}

fn truth_lookup<'a>(truth: &'a HashMap<String, Vec<TokenId>>, masked: &MaskedDocument) -> Result<&'a [TokenId]> {
    let tokens = truth
        .get(masked.source_id())
        .ok_or_else(|| Error::Config(format!("oracle has no document {:?}", masked.source_id())))?;
    if tokens.len() != masked.len() {
        return Err(Error::LengthMismatch {
            original: tokens.len(),
            filled: masked.len(),
        });
    }
    Ok(tokens)
}

fn truth_table(docs: &[Document]) -> HashMap<String, Vec<TokenId>> {
    docs.iter()
        .map(|d| (d.id().to_string(), d.tokens().to_vec()))
        .collect()
}

/// Always answers the true token. Ignores the summary.
#[derive(Debug, Clone)]
pub struct OracleCloze {
    truth: HashMap<String, Vec<TokenId>>,
}

impl OracleCloze {
    pub fn new(docs: &[Document]) -> Self {
        OracleCloze {
            truth: truth_table(docs),
        }
    }
}

impl ClozeModel for OracleCloze {
    fn backend_id(&self) -> String {
        "oracle-cloze".into()
    }

    fn context_limit(&self) -> usize {
        usize::MAX
    }

    fn predict(&self, _summary: &SummaryText, masked: &MaskedDocument) -> Result<Vec<TokenId>> {
        let truth = truth_lookup(&self.truth, masked)?;
        Ok(masked.mask_indices().iter().map(|&i| truth[i]).collect())
    }
}

/// Answers the true token only when the summary contains it, else a fixed
/// fallback token.
#[derive(Debug, Clone)]
pub struct SummaryOracleCloze {
    truth: HashMap<String, Vec<TokenId>>,
    fallback: TokenId,
}

impl SummaryOracleCloze {
    pub fn new(docs: &[Document], fallback: TokenId) -> Self {
        SummaryOracleCloze {
            truth: truth_table(docs),
            fallback,
        }
    }
}

impl ClozeModel for SummaryOracleCloze {
    fn backend_id(&self) -> String {
        "summary-oracle-cloze".into()
    }

    fn context_limit(&self) -> usize {
        usize::MAX
    }

    fn predict(&self, summary: &SummaryText, masked: &MaskedDocument) -> Result<Vec<TokenId>> {
        let truth = truth_lookup(&self.truth, masked)?;
        let present: HashSet<TokenId> = summary.tokens.iter().copied().collect();
        Ok(masked
            .mask_indices()
            .iter()
            .map(|&i| if present.contains(&truth[i]) { truth[i] } else { self.fallback })
            .collect())
    }
}

/// Rule-based baseline. Each blank receives the summary token that most often
/// appeared next to the blank's visible neighbours in the fitting corpus; with
/// no such evidence it receives the corpus-most-frequent keyword.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyBaselineCloze {
    left: HashMap<(TokenId, TokenId), u64>,
    right: HashMap<(TokenId, TokenId), u64>,
    fallback: TokenId,
    blank: TokenId,
    start: TokenId,
    end: TokenId,
    specials: Vec<TokenId>,
    context_limit: usize,
}

impl FrequencyBaselineCloze {
    pub const DEFAULT_CONTEXT: usize = 512;

    pub fn fit(docs: &[Document], masker: &Masker, vocab: &Vocab) -> Self {
        let mut left = HashMap::new();
        let mut right = HashMap::new();
        let mut keyword_docs: BTreeMap<String, usize> = BTreeMap::new();
        for doc in docs {
            let toks = doc.tokens();
            for i in 0..toks.len() {
                let l = if i == 0 { vocab.start() } else { toks[i - 1] };
                let r = toks.get(i + 1).copied().unwrap_or(vocab.end());
                *left.entry((l, toks[i])).or_insert(0) += 1;
                *right.entry((toks[i], r)).or_insert(0) += 1;
            }
            for kw in masker.keywords(doc) {
                *keyword_docs.entry(kw).or_insert(0) += 1;
            }
        }
        // BTreeMap iteration + strict comparison keeps the lexicographically first on ties
        let mut best: Option<(&str, usize)> = None;
        for (kw, &n) in &keyword_docs {
            if best.is_none_or(|(_, b)| n > b) {
                best = Some((kw, n));
            }
        }
        let fallback = best.map_or(vocab.unk(), |(kw, _)| vocab.word_id(kw));
        Self::from_parts(left, right, fallback, vocab)
    }

    fn from_parts(
        left: HashMap<(TokenId, TokenId), u64>,
        right: HashMap<(TokenId, TokenId), u64>,
        fallback: TokenId,
        vocab: &Vocab,
    ) -> Self {
        FrequencyBaselineCloze {
            left,
            right,
            fallback,
            blank: vocab.blank(),
            start: vocab.start(),
            end: vocab.end(),
            specials: (0..vocab.len() as TokenId).filter(|&t| vocab.is_special(t)).collect(),
            context_limit: Self::DEFAULT_CONTEXT,
        }
    }

    pub fn fallback(&self) -> TokenId {
        self.fallback
    }

    fn cooccurrence(&self, left: TokenId, candidate: TokenId, right: TokenId) -> u64 {
        self.left.get(&(left, candidate)).copied().unwrap_or(0)
            + self.right.get(&(candidate, right)).copied().unwrap_or(0)
    }
}

impl ClozeModel for FrequencyBaselineCloze {
    fn backend_id(&self) -> String {
        "frequency-baseline-cloze".into()
    }

    fn context_limit(&self) -> usize {
        self.context_limit
    }

    fn predict(&self, summary: &SummaryText, masked: &MaskedDocument) -> Result<Vec<TokenId>> {
        check_cloze_context(self.context_limit, summary, masked)?;
        let mut candidates: Vec<TokenId> = summary
            .tokens
            .iter()
            .copied()
            .filter(|t| !self.specials.contains(t))
            .collect();
        candidates.sort_unstable();
        candidates.dedup();
        Ok(masked
            .mask_indices()
            .iter()
            .map(|&i| {
                let (l, r) = blank_context(masked, i, self.blank, self.start, self.end);
                let mut best = (0u64, self.fallback);
                for &c in &candidates {
                    let score = self.cooccurrence(l, c, r);
                    if score > best.0 {
                        best = (score, c);
                    }
                }
                best.1
            })
            .collect())
    }
}

fn write_pairs(out: &mut ParamWriter, map: &HashMap<(TokenId, TokenId), u64>) {
    let sorted: BTreeMap<_, _> = map.iter().collect();
    out.u64(sorted.len() as u64);
    for (&(a, b), &n) in sorted {
        out.u64(a as u64);
        out.u64(b as u64);
        out.u64(n);
    }
}

fn read_pairs(input: &mut ParamReader<'_>) -> Result<HashMap<(TokenId, TokenId), u64>> {
    let n = input.usize()?;
    let mut map = HashMap::new();
    for _ in 0..n {
        let a = input.u64()? as TokenId;
        let b = input.u64()? as TokenId;
        map.insert((a, b), input.u64()?);
    }
    Ok(map)
}

impl Checkpoint for FrequencyBaselineCloze {
    const KIND: &'static str = "frequency-baseline-cloze";

    fn param_count(&self) -> usize {
        self.left.len() + self.right.len() + 1
    }

    fn encode_params(&self, out: &mut ParamWriter) {
        out.u64(self.fallback as u64);
        out.u64(self.context_limit as u64);
        write_pairs(out, &self.left);
        write_pairs(out, &self.right);
    }

    fn decode_params(input: &mut ParamReader<'_>, vocab: &Vocab) -> Result<Self> {
        let fallback = input.u64()? as TokenId;
        let context_limit = input.usize()?;
        let left = read_pairs(input)?;
        let right = read_pairs(input)?;
        let mut model = Self::from_parts(left, right, fallback, vocab);
        model.context_limit = context_limit;
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShallowClozeConfig {
    pub embed_dim: usize,
    pub init_scale: f64,
    pub context_limit: usize,
    pub seed: u64,
}

impl Default for ShallowClozeConfig {
    fn default() -> Self {
        ShallowClozeConfig {
            embed_dim: 16,
            init_scale: 0.1,
            context_limit: 512,
            seed: 0,
        }
    }
}

/// Trainable shallow cloze classifier.
///
/// The score of candidate `c` for a blank with visible neighbours `(l, r)` is
///
/// ```text
/// bias[c] + [c in summary] * (summary + summary_gain[c])
///         + visible * [c visible in masked doc]
///         + (left[l] + right[r]) . cand[c]
/// ```
///
/// and blanks are predicted independently by argmax.
#[derive(Debug, Clone, PartialEq)]
pub struct ShallowCloze {
    dim: usize,
    context_limit: usize,
    blank: TokenId,
    start: TokenId,
    end: TokenId,
    blocked: Vec<bool>,
    bias: Vec<f64>,
    summary_gain: Vec<f64>,
    summary: f64,
    visible: f64,
    left: Vec<f64>,
    right: Vec<f64>,
    cand: Vec<f64>,
}

struct ClozeInputs {
    in_summary: Vec<bool>,
    visible: Vec<bool>,
}

impl ShallowCloze {
    pub fn new(vocab: &Vocab, config: &ShallowClozeConfig) -> Self {
        let v = vocab.len();
        let d = config.embed_dim;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut init = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| rng.gen_range(-config.init_scale..=config.init_scale))
                .collect()
        };
        let left = init(v * d);
        let right = init(v * d);
        let cand = init(v * d);
        ShallowCloze {
            dim: d,
            context_limit: config.context_limit,
            blank: vocab.blank(),
            start: vocab.start(),
            end: vocab.end(),
            blocked: (0..v as TokenId).map(|t| vocab.is_special(t)).collect(),
            bias: vec![0.0; v],
            summary_gain: vec![0.0; v],
            summary: 0.0,
            visible: 0.0,
            left,
            right,
            cand,
        }
    }

    fn size(&self) -> usize {
        self.bias.len()
    }

    fn inputs(&self, summary: &SummaryText, masked: &MaskedDocument) -> ClozeInputs {
        let mut in_summary = vec![false; self.size()];
        for &t in &summary.tokens {
            if let Some(s) = in_summary.get_mut(t as usize) {
                *s = true;
            }
        }
        let mut visible = vec![false; self.size()];
        for &t in masked.tokens() {
            if let Some(s) = visible.get_mut(t as usize) {
                *s = true;
            }
        }
        ClozeInputs { in_summary, visible }
    }

    fn query(&self, l: TokenId, r: TokenId) -> Vec<f64> {
        let d = self.dim;
        let (l, r) = (l as usize, r as usize);
        (0..d).map(|k| self.left[l * d + k] + self.right[r * d + k]).collect()
    }

    fn scores(&self, inputs: &ClozeInputs, q: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..self.size())
            .map(|c| {
                if self.blocked[c] {
                    return f64::NEG_INFINITY;
                }
                let mut z = self.bias[c];
                if inputs.in_summary[c] {
                    z += self.summary + self.summary_gain[c];
                }
                if inputs.visible[c] {
                    z += self.visible;
                }
                z + q.iter().zip(&self.cand[c * d..(c + 1) * d]).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        out.extend_from_slice(&self.bias);
        out.extend_from_slice(&self.summary_gain);
        out.extend([self.summary, self.visible]);
        out.extend_from_slice(&self.left);
        out.extend_from_slice(&self.right);
        out.extend_from_slice(&self.cand);
        out
    }
}

impl ClozeModel for ShallowCloze {
    fn backend_id(&self) -> String {
        "shallow-cloze".into()
    }

    fn context_limit(&self) -> usize {
        self.context_limit
    }

    fn predict(&self, summary: &SummaryText, masked: &MaskedDocument) -> Result<Vec<TokenId>> {
        check_cloze_context(self.context_limit, summary, masked)?;
        let inputs = self.inputs(summary, masked);
        Ok(masked
            .mask_indices()
            .iter()
            .map(|&i| {
                let (l, r) = blank_context(masked, i, self.blank, self.start, self.end);
                TokenDistribution::from_logits(&self.scores(&inputs, &self.query(l, r))).argmax()
            })
            .collect())
    }

    fn train_example(
        &mut self,
        summary: &SummaryText,
        masked: &MaskedDocument,
        targets: &[TokenId],
        learning_rate: f64,
    ) -> Result<(f64, usize)> {
        check_cloze_context(self.context_limit, summary, masked)?;
        if targets.len() != masked.blank_count() {
            return Err(Error::LengthMismatch {
                original: targets.len(),
                filled: masked.blank_count(),
            });
        }
        let v = self.size();
        let d = self.dim;
        let inputs = self.inputs(summary, masked);
        let mut g_bias = vec![0.0; v];
        let mut g_gain = vec![0.0; v];
        let (mut g_summary, mut g_visible) = (0.0, 0.0);
        let mut g_cand = vec![0.0; v * d];
        let mut g_ctx: HashMap<(bool, usize), Vec<f64>> = HashMap::new();
        let mut total = 0.0;
        let mut count = 0;
        for (&i, &y) in masked.mask_indices().iter().zip(targets) {
            let y = y as usize;
            if y >= v || self.blocked[y] {
                continue;
            }
            let (l, r) = blank_context(masked, i, self.blank, self.start, self.end);
            let q = self.query(l, r);
            let dist = TokenDistribution::from_logits(&self.scores(&inputs, &q));
            total -= dist.probs()[y].max(f64::MIN_POSITIVE).ln();
            count += 1;
            let mut g_q = vec![0.0; d];
            for c in 0..v {
                let pc = dist.probs()[c];
                let err = pc - if c == y { 1.0 } else { 0.0 };
                if err == 0.0 {
                    continue;
                }
                g_bias[c] += err;
                if inputs.in_summary[c] {
                    g_gain[c] += err;
                    g_summary += err;
                }
                if inputs.visible[c] {
                    g_visible += err;
                }
                let cand = &self.cand[c * d..(c + 1) * d];
                for k in 0..d {
                    g_cand[c * d + k] += err * q[k];
                    g_q[k] += err * cand[k];
                }
            }
            for key in [(true, l as usize), (false, r as usize)] {
                let acc = g_ctx.entry(key).or_insert_with(|| vec![0.0; d]);
                for k in 0..d {
                    acc[k] += g_q[k];
                }
            }
        }
        if count == 0 {
            return Ok((0.0, 0));
        }
        let step = learning_rate / count as f64;
        for c in 0..v {
            self.bias[c] -= step * g_bias[c];
            self.summary_gain[c] -= step * g_gain[c];
        }
        self.summary -= step * g_summary;
        self.visible -= step * g_visible;
        for (a, b) in self.cand.iter_mut().zip(&g_cand) {
            *a -= step * b;
        }
        let mut keys: Vec<_> = g_ctx.keys().copied().collect();
        keys.sort_unstable();
        for key in keys {
            let g = &g_ctx[&key];
            let table = if key.0 { &mut self.left } else { &mut self.right };
            for k in 0..d {
                table[key.1 * d + k] -= step * g[k];
            }
        }
        Ok((total, count))
    }
}

impl Checkpoint for ShallowCloze {
    const KIND: &'static str = "shallow-cloze";

    fn param_count(&self) -> usize {
        2 * self.size() + 2 + 3 * self.size() * self.dim
    }

    fn encode_params(&self, out: &mut ParamWriter) {
        out.u64(self.dim as u64);
        out.u64(self.context_limit as u64);
        out.f64s(&self.bias);
        out.f64s(&self.summary_gain);
        out.f64s(&[self.summary, self.visible]);
        out.f64s(&self.left);
        out.f64s(&self.right);
        out.f64s(&self.cand);
    }

    fn decode_params(input: &mut ParamReader<'_>, vocab: &Vocab) -> Result<Self> {
        let v = vocab.len();
        let dim = input.usize()?;
        let context_limit = input.usize()?;
        let mut model = ShallowCloze::new(
            vocab,
            &ShallowClozeConfig {
                embed_dim: dim,
                context_limit,
                ..Default::default()
            },
        );
        model.bias = input.f64s_exact(v, "bias")?;
        model.summary_gain = input.f64s_exact(v, "summary_gain")?;
        let scalars = input.f64s_exact(2, "scalars")?;
        model.summary = scalars[0];
        model.visible = scalars[1];
        model.left = input.f64s_exact(v * dim, "left")?;
        model.right = input.f64s_exact(v * dim, "right")?;
        model.cand = input.f64s_exact(v * dim, "cand")?;
        Ok(model)
    }
}

/// Loads whichever checkpointed cloze backend `dir` holds.
pub fn load_cloze(dir: &Path, vocab: &Vocab) -> Result<Box<dyn ClozeModel>> {
    let manifest = read_manifest(dir)?;
    match manifest.kind.as_str() {
        ShallowCloze::KIND => Ok(Box::new(load_checkpoint::<ShallowCloze>(dir, vocab)?)),
        FrequencyBaselineCloze::KIND => {
            Ok(Box::new(load_checkpoint::<FrequencyBaselineCloze>(dir, vocab)?))
        }
        other => Err(Error::Checkpoint(format!("{other} is not a cloze backend"))),
    }
}
