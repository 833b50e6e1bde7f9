//! Copy-biased pointer summarizer.
//!
//! A log-linear next-token model over the vocabulary. The logit of token `t`
//! after prefix `w_1..w_j` on document `D` is
//!
//! ```text
//! bias[t]
//!   + [t in D] * (copy + copy_gain[t])
//!   + count * ln(1 + count_D(t))
//!   + repeat * [t in prefix]
//!   + emb_in[w_j] . emb_out[t]
//!   + [t = END] * end_step * j / length_hint
//! ```
//!
//! where `w_0` is START. Reserved markers other than END get zero mass. The
//! gradient of `ln p` is `phi(w) - E_p[phi]` for every linear block, which
//! keeps the policy update exact and cheap.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::checkpoint::{Checkpoint, ParamReader, ParamWriter};
use super::{check_summarizer_context, PolicyExample, Summarizer, TokenDistribution};
use crate::corpus::{Document, TokenId, Vocab};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PointerSummarizerConfig {
    pub embed_dim: usize,
    pub init_scale: f64,
    pub copy_init: f64,
    pub repeat_init: f64,
    pub end_bias_init: f64,
    pub end_step_init: f64,
    pub context_limit: usize,
    /// Summary length at which the END feature reaches `end_step`.
    pub length_hint: usize,
    /// Global L2 clip applied to each averaged gradient.
    pub max_grad_norm: Option<f64>,
    pub seed: u64,
}

impl Default for PointerSummarizerConfig {
    fn default() -> Self {
        PointerSummarizerConfig {
            embed_dim: 8,
            init_scale: 0.1,
            copy_init: 3.0,
            repeat_init: -1.0,
            end_bias_init: -2.0,
            end_step_init: 8.0,
            context_limit: 1024,
            length_hint: 10,
            max_grad_norm: Some(10.0),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointerSummarizer {
    dim: usize,
    context_limit: usize,
    length_hint: usize,
    max_grad_norm: Option<f64>,
    start: TokenId,
    end: TokenId,
    blocked: Vec<bool>,
    bias: Vec<f64>,
    copy_gain: Vec<f64>,
    copy: f64,
    count: f64,
    repeat: f64,
    end_step: f64,
    emb_in: Vec<f64>,
    emb_out: Vec<f64>,
}

/// Per-state features shared by every candidate token.
struct State {
    prev: usize,
    position: f64,
    doc_count: HashMap<TokenId, usize>,
    in_prefix: Vec<bool>,
}

#[derive(Clone)]
struct Gradient {
    bias: Vec<f64>,
    copy_gain: Vec<f64>,
    copy: f64,
    count: f64,
    repeat: f64,
    end_step: f64,
    emb_in: Vec<f64>,
    emb_out: Vec<f64>,
}

impl Gradient {
    fn zeros(v: usize, d: usize) -> Self {
        Gradient {
            bias: vec![0.0; v],
            copy_gain: vec![0.0; v],
            copy: 0.0,
            count: 0.0,
            repeat: 0.0,
            end_step: 0.0,
            emb_in: vec![0.0; v * d],
            emb_out: vec![0.0; v * d],
        }
    }

    fn norm(&self) -> f64 {
        let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        (sq(&self.bias)
            + sq(&self.copy_gain)
            + self.copy * self.copy
            + self.count * self.count
            + self.repeat * self.repeat
            + self.end_step * self.end_step
            + sq(&self.emb_in)
            + sq(&self.emb_out))
        .sqrt()
    }
}

impl PointerSummarizer {
    /// Deterministic initialization from `config.seed`.
    pub fn new(vocab: &Vocab, config: &PointerSummarizerConfig) -> Self {
        let v = vocab.len();
        let d = config.embed_dim;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut init = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| rng.gen_range(-config.init_scale..=config.init_scale))
                .collect()
        };
        let emb_in = init(v * d);
        let emb_out = init(v * d);
        let blocked = (0..v as TokenId)
            .map(|t| vocab.is_special(t) && t != vocab.end())
            .collect();
        let mut bias = vec![0.0; v];
        bias[vocab.end() as usize] = config.end_bias_init;
        PointerSummarizer {
            dim: d,
            context_limit: config.context_limit,
            length_hint: config.length_hint.max(1),
            max_grad_norm: config.max_grad_norm,
            start: vocab.start(),
            end: vocab.end(),
            blocked,
            bias,
            copy_gain: vec![0.0; v],
            copy: config.copy_init,
            count: 0.0,
            repeat: config.repeat_init,
            end_step: config.end_step_init,
            emb_in,
            emb_out,
        }
    }

    fn size(&self) -> usize {
        self.bias.len()
    }

    fn state(&self, document: &Document, prefix: &[TokenId]) -> State {
        let mut doc_count = HashMap::new();
        for &t in document.tokens() {
            *doc_count.entry(t).or_insert(0) += 1;
        }
        let mut in_prefix = vec![false; self.size()];
        for &t in prefix {
            if let Some(slot) = in_prefix.get_mut(t as usize) {
                *slot = true;
            }
        }
        State {
            prev: prefix.last().copied().unwrap_or(self.start) as usize,
            position: prefix.len() as f64 / self.length_hint as f64,
            doc_count,
            in_prefix,
        }
    }

    fn emb(table: &[f64], dim: usize, t: usize) -> &[f64] {
        &table[t * dim..(t + 1) * dim]
    }

    fn doc_features(state: &State, t: usize) -> (f64, f64) {
        match state.doc_count.get(&(t as TokenId)) {
            Some(&c) => (1.0, (1.0 + c as f64).ln()),
            None => (0.0, 0.0),
        }
    }

    fn logits(&self, state: &State) -> Vec<f64> {
        let d = self.dim;
        let h = Self::emb(&self.emb_in, d, state.prev);
        (0..self.size())
            .map(|t| {
                if self.blocked[t] {
                    return f64::NEG_INFINITY;
                }
                let (in_doc, log_count) = Self::doc_features(state, t);
                let mut z = self.bias[t]
                    + in_doc * (self.copy + self.copy_gain[t])
                    + self.count * log_count
                    + if state.in_prefix[t] { self.repeat } else { 0.0 };
                z += h
                    .iter()
                    .zip(Self::emb(&self.emb_out, d, t))
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
                if t == self.end as usize {
                    z += self.end_step * state.position;
                }
                z
            })
            .collect()
    }

    /// Adds `scale * d/dθ ln p(target | state)` to `grad`.
    fn accumulate(&self, state: &State, target: usize, scale: f64, grad: &mut Gradient) {
        let d = self.dim;
        let probs = TokenDistribution::from_logits(&self.logits(state));
        let p = probs.probs();
        let h = Self::emb(&self.emb_in, d, state.prev).to_vec();
        let mut expected_out = vec![0.0; d];
        let (mut e_copy, mut e_count, mut e_repeat) = (0.0, 0.0, 0.0);
        for t in 0..self.size() {
            let pt = p[t];
            if pt == 0.0 && t != target {
                continue;
            }
            let indicator = if t == target { 1.0 } else { 0.0 };
            let delta = indicator - pt;
            let (in_doc, log_count) = Self::doc_features(state, t);
            grad.bias[t] += scale * delta;
            grad.copy_gain[t] += scale * in_doc * delta;
            e_copy += pt * in_doc;
            e_count += pt * log_count;
            if state.in_prefix[t] {
                e_repeat += pt;
            }
            let out = Self::emb(&self.emb_out, d, t);
            let g_out = &mut grad.emb_out[t * d..(t + 1) * d];
            for k in 0..d {
                g_out[k] += scale * delta * h[k];
                expected_out[k] += pt * out[k];
            }
        }
        let (in_doc, log_count) = Self::doc_features(state, target);
        grad.copy += scale * (in_doc - e_copy);
        grad.count += scale * (log_count - e_count);
        let rep = if state.in_prefix[target] { 1.0 } else { 0.0 };
        grad.repeat += scale * (rep - e_repeat);
        let is_end = if target == self.end as usize { 1.0 } else { 0.0 };
        grad.end_step += scale * state.position * (is_end - p[self.end as usize]);
        let target_out = Self::emb(&self.emb_out, d, target);
        let g_in = &mut grad.emb_in[state.prev * d..(state.prev + 1) * d];
        for k in 0..d {
            g_in[k] += scale * (target_out[k] - expected_out[k]);
        }
    }

    fn apply(&mut self, grad: &Gradient, step: f64) {
        let add = |dst: &mut [f64], src: &[f64]| {
            for (a, b) in dst.iter_mut().zip(src) {
                *a += step * b;
            }
        };
        add(&mut self.bias, &grad.bias);
        add(&mut self.copy_gain, &grad.copy_gain);
        add(&mut self.emb_in, &grad.emb_in);
        add(&mut self.emb_out, &grad.emb_out);
        self.copy += step * grad.copy;
        self.count += step * grad.count;
        self.repeat += step * grad.repeat;
        self.end_step += step * grad.end_step;
    }

    /// All parameters flattened, for equality checks in tests and tools.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        out.extend_from_slice(&self.bias);
        out.extend_from_slice(&self.copy_gain);
        out.extend([self.copy, self.count, self.repeat, self.end_step]);
        out.extend_from_slice(&self.emb_in);
        out.extend_from_slice(&self.emb_out);
        out
    }
}

impl Summarizer for PointerSummarizer {
    fn backend_id(&self) -> String {
        "pointer-summarizer".into()
    }

    fn vocab_size(&self) -> usize {
        self.size()
    }

    fn end_token(&self) -> TokenId {
        self.end
    }

    fn context_limit(&self) -> usize {
        self.context_limit
    }

    fn next_token_distribution(&self, document: &Document, prefix: &[TokenId]) -> Result<TokenDistribution> {
        check_summarizer_context(self.context_limit, document, prefix)?;
        let state = self.state(document, prefix);
        Ok(TokenDistribution::from_logits(&self.logits(&state)))
    }

    fn apply_policy_update(&mut self, batch: &[PolicyExample<'_>], step_size: f64) -> Result<()> {
        if batch.iter().all(|ex| ex.advantage == 0.0 || ex.tokens.is_empty()) {
            return Ok(());
        }
        let mut grad = Gradient::zeros(self.size(), self.dim);
        let scale_batch = 1.0 / batch.len() as f64;
        for ex in batch {
            if ex.advantage == 0.0 {
                continue;
            }
            check_summarizer_context(self.context_limit, ex.document, ex.tokens)?;
            for j in 0..ex.tokens.len() {
                let target = ex.tokens[j] as usize;
                if target >= self.size() || self.blocked[target] {
                    return Err(Error::Config(format!("token {target} cannot be generated")));
                }
                let state = self.state(ex.document, &ex.tokens[..j]);
                self.accumulate(&state, target, ex.advantage * scale_batch, &mut grad);
            }
        }
        let mut step = step_size;
        if let Some(max) = self.max_grad_norm {
            let norm = grad.norm();
            if norm > max {
                step *= max / norm;
            }
        }
        self.apply(&grad, step);
        Ok(())
    }
}

impl Checkpoint for PointerSummarizer {
    const KIND: &'static str = "pointer-summarizer";

    fn param_count(&self) -> usize {
        2 * self.size() + 4 + 2 * self.size() * self.dim
    }

    fn encode_params(&self, out: &mut ParamWriter) {
        out.u64(self.dim as u64);
        out.u64(self.context_limit as u64);
        out.f64(self.max_grad_norm.unwrap_or(-1.0));
        out.u64(self.length_hint as u64);
        out.f64s(&self.bias);
        out.f64s(&self.copy_gain);
        out.f64s(&[self.copy, self.count, self.repeat, self.end_step]);
        out.f64s(&self.emb_in);
        out.f64s(&self.emb_out);
    }

    fn decode_params(input: &mut ParamReader<'_>, vocab: &Vocab) -> Result<Self> {
        let v = vocab.len();
        let dim = input.usize()?;
        let context_limit = input.usize()?;
        let clip = input.f64()?;
        let length_hint = input.usize()?;
        let mut model = PointerSummarizer::new(
            vocab,
            &PointerSummarizerConfig {
                embed_dim: dim,
                context_limit,
                max_grad_norm: (clip >= 0.0).then_some(clip),
                length_hint,
                ..Default::default()
            },
        );
        model.bias = input.f64s_exact(v, "bias")?;
        model.copy_gain = input.f64s_exact(v, "copy_gain")?;
        let scalars = input.f64s_exact(4, "scalars")?;
        model.copy = scalars[0];
        model.count = scalars[1];
        model.repeat = scalars[2];
        model.end_step = scalars[3];
        model.emb_in = input.f64s_exact(v * dim, "emb_in")?;
        model.emb_out = input.f64s_exact(v * dim, "emb_out")?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{apply_policy_update, sequence_log_prob};

    fn setup() -> (Vocab, Document, PointerSummarizer) {
        let vocab = Vocab::from_texts([
            "the chilean president cancelled the apec summit in santiago . protests paralyzed the country",
            "markets fell on monday as traders sold shares",
        ]);
        let doc = Document::new(
            "d",
            "the chilean president cancelled the apec summit in santiago .",
            &vocab,
        );
        let model = PointerSummarizer::new(&vocab, &PointerSummarizerConfig::default());
        (vocab, doc, model)
    }

    #[test]
    fn distribution_is_normalized_and_blocks_markers() {
        let (vocab, doc, model) = setup();
        let dist = model.next_token_distribution(&doc, &[]).unwrap();
        let total: f64 = dist.probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
        for t in [vocab.unk(), vocab.blank(), vocab.sep(), vocab.start()] {
            assert_eq!(dist.prob(t), 0.0);
        }
        assert!(dist.prob(vocab.end()) > 0.0);
    }

    #[test]
    fn copy_bias_favours_document_words() {
        let (vocab, doc, model) = setup();
        let dist = model.next_token_distribution(&doc, &[]).unwrap();
        let uniform = 1.0 / vocab.len() as f64;
        assert!(dist.prob(vocab.id("apec").unwrap()) > uniform);
        assert!(dist.prob(vocab.id("apec").unwrap()) > dist.prob(vocab.id("markets").unwrap()));
    }

    #[test]
    fn context_overflow_is_reported() {
        let (vocab, doc, _) = setup();
        let model = PointerSummarizer::new(
            &vocab,
            &PointerSummarizerConfig { context_limit: 5, ..Default::default() },
        );
        let err = model.next_token_distribution(&doc, &[]).unwrap_err();
        assert!(matches!(err, Error::ContextOverflow { limit: 5, required: 10, excess: 5 }));
    }

    #[test]
    fn zero_advantage_leaves_parameters_bit_identical() {
        let (vocab, doc, mut model) = setup();
        let before = model.clone();
        let tokens = vocab.tokenize("apec summit");
        apply_policy_update(&mut model, &doc, &tokens, 0.0, 0.5).unwrap();
        assert_eq!(model, before);
    }

    #[test]
    fn advantage_sign_moves_sequence_likelihood() {
        let (vocab, doc, model) = setup();
        let mut tokens = vocab.tokenize("apec summit santiago");
        tokens.push(vocab.end());
        let base = sequence_log_prob(&model, &doc, &tokens).unwrap();
        let mut up = model.clone();
        apply_policy_update(&mut up, &doc, &tokens, 1.0, 1e-3).unwrap();
        assert!(sequence_log_prob(&up, &doc, &tokens).unwrap() > base);
        let mut down = model.clone();
        apply_policy_update(&mut down, &doc, &tokens, -1.0, 1e-3).unwrap();
        assert!(sequence_log_prob(&down, &doc, &tokens).unwrap() < base);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (vocab, doc, model) = setup();
        let tokens = vocab.tokenize("apec the summit");
        let f = |m: &PointerSummarizer| sequence_log_prob(m, &doc, &tokens).unwrap();
        let mut grad = Gradient::zeros(model.size(), model.dim);
        for j in 0..tokens.len() {
            let state = model.state(&doc, &tokens[..j]);
            model.accumulate(&state, tokens[j] as usize, 1.0, &mut grad);
        }
        let eps = 1e-6;
        let check = |analytic: f64, perturb: &dyn Fn(&mut PointerSummarizer, f64)| {
            let mut plus = model.clone();
            perturb(&mut plus, eps);
            let mut minus = model.clone();
            perturb(&mut minus, -eps);
            let numeric = (f(&plus) - f(&minus)) / (2.0 * eps);
            assert!((numeric - analytic).abs() < 1e-6, "numeric {numeric} vs analytic {analytic}");
        };
        let apec = vocab.id("apec").unwrap() as usize;
        let the = vocab.id("the").unwrap() as usize;
        check(grad.bias[apec], &|m, e| m.bias[apec] += e);
        check(grad.copy_gain[the], &|m, e| m.copy_gain[the] += e);
        check(grad.copy, &|m, e| m.copy += e);
        check(grad.count, &|m, e| m.count += e);
        check(grad.repeat, &|m, e| m.repeat += e);
        check(grad.emb_out[apec * 8 + 3], &|m, e| m.emb_out[apec * 8 + 3] += e);
        check(grad.emb_in[apec * 8 + 1], &|m, e| m.emb_in[apec * 8 + 1] += e);
        let mut with_end = tokens.clone();
        with_end.push(vocab.end());
        let mut g2 = Gradient::zeros(model.size(), model.dim);
        for j in 0..with_end.len() {
            let state = model.state(&doc, &with_end[..j]);
            model.accumulate(&state, with_end[j] as usize, 1.0, &mut g2);
        }
        let f2 = |m: &PointerSummarizer| sequence_log_prob(m, &doc, &with_end).unwrap();
        let mut plus = model.clone();
        plus.end_step += eps;
        let mut minus = model.clone();
        minus.end_step -= eps;
        let numeric = (f2(&plus) - f2(&minus)) / (2.0 * eps);
        assert!((numeric - g2.end_step).abs() < 1e-6);
    }

    #[test]
    fn same_seed_same_model() {
        let (vocab, _, _) = setup();
        let cfg = PointerSummarizerConfig { seed: 9, ..Default::default() };
        assert_eq!(PointerSummarizer::new(&vocab, &cfg), PointerSummarizer::new(&vocab, &cfg));
        let other = PointerSummarizerConfig { seed: 10, ..Default::default() };
        assert_ne!(PointerSummarizer::new(&vocab, &cfg), PointerSummarizer::new(&vocab, &other));
    }

    #[test]
    fn checkpoint_round_trip_reproduces_outputs() {
        let (vocab, doc, mut model) = setup();
        let tokens = vocab.tokenize("apec summit");
        apply_policy_update(&mut model, &doc, &tokens, 1.5, 0.1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        crate::backends::save_checkpoint(dir.path(), &model, &vocab).unwrap();
        let back: PointerSummarizer = crate::backends::load_checkpoint(dir.path(), &vocab).unwrap();
        assert_eq!(back, model);
        assert_eq!(
            back.next_token_distribution(&doc, &tokens).unwrap(),
            model.next_token_distribution(&doc, &tokens).unwrap()
        );
    }
}
