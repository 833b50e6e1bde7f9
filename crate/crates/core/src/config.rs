//! Run configuration: a flat `key = value` file with `#` comments.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scoring::{FrameRule, PenaltyStacking, Weights};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub tfidf: Option<PathBuf>,
    pub coverage_checkpoint: Option<PathBuf>,
    pub lm_checkpoint: Option<PathBuf>,
    pub summarizer_checkpoint: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,

    pub k: usize,
    pub budget: usize,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub proxy_len: usize,
    pub window: usize,
    pub frame_threshold: f64,
    pub frame_rule: FrameRule,
    pub rail_stacking: PenaltyStacking,
    pub steps: u64,
    pub seed: u64,
    pub lp_low: Option<f64>,
    pub lp_high: Option<f64>,
    pub calibration_low: f64,
    pub calibration_high: f64,
    pub tfidf_sample: usize,
    pub cloze_backend: String,
    pub coverage_epochs: usize,
    pub coverage_lr: f64,
    pub step_size: f64,
    pub temperature: f64,
    pub batch_size: usize,
    pub checkpoint_every: u64,
    pub max_doc_words: usize,
    pub lm_order: usize,
    pub lm_smoothing: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: None,
            vocab: None,
            tfidf: None,
            coverage_checkpoint: None,
            lm_checkpoint: None,
            summarizer_checkpoint: None,
            out_dir: None,
            k: crate::masking::DEFAULT_K,
            budget: 10,
            alpha: 5.0,
            beta: 1.0,
            delta: 2.0,
            proxy_len: crate::coverage::DEFAULT_PROXY_LEN,
            window: crate::scoring::DEFAULT_WINDOW,
            frame_threshold: crate::scoring::DEFAULT_FRAME_THRESHOLD,
            frame_rule: FrameRule::Window,
            rail_stacking: PenaltyStacking::Stack,
            steps: 1000,
            seed: 0,
            lp_low: None,
            lp_high: None,
            calibration_low: crate::fluency::DEFAULT_LOW_PERCENTILE,
            calibration_high: crate::fluency::DEFAULT_HIGH_PERCENTILE,
            tfidf_sample: crate::masking::DEFAULT_FIT_SAMPLE,
            cloze_backend: "shallow".into(),
            coverage_epochs: 10,
            coverage_lr: 0.5,
            step_size: 0.05,
            temperature: 1.0,
            batch_size: 1,
            checkpoint_every: 100,
            max_doc_words: 400,
            lm_order: 2,
            lm_smoothing: 0.1,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

impl RunConfig {
    pub fn weights(&self) -> Weights {
        Weights {
            alpha: self.alpha,
            beta: self.beta,
            delta: self.delta,
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let path = || Some(PathBuf::from(value));
        match key {
            "corpus" => self.corpus = path(),
            "vocab" => self.vocab = path(),
            "tfidf" => self.tfidf = path(),
            "coverage_checkpoint" => self.coverage_checkpoint = path(),
            "lm_checkpoint" => self.lm_checkpoint = path(),
            "summarizer_checkpoint" => self.summarizer_checkpoint = path(),
            "out_dir" => self.out_dir = path(),
            "k" => self.k = parse(key, value)?,
            "budget" => self.budget = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "delta" => self.delta = parse(key, value)?,
            "proxy_len" => self.proxy_len = parse(key, value)?,
            "window" => self.window = parse(key, value)?,
            "frame_threshold" => self.frame_threshold = parse(key, value)?,
            "frame_rule" => self.frame_rule = value.parse()?,
            "rail_stacking" => self.rail_stacking = value.parse()?,
            "steps" => self.steps = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "lp_low" => self.lp_low = Some(parse(key, value)?),
            "lp_high" => self.lp_high = Some(parse(key, value)?),
            "calibration_low" => self.calibration_low = parse(key, value)?,
            "calibration_high" => self.calibration_high = parse(key, value)?,
            "tfidf_sample" => self.tfidf_sample = parse(key, value)?,
            "cloze_backend" => self.cloze_backend = value.to_string(),
            "coverage_epochs" => self.coverage_epochs = parse(key, value)?,
            "coverage_lr" => self.coverage_lr = parse(key, value)?,
            "step_size" => self.step_size = parse(key, value)?,
            "temperature" => self.temperature = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "checkpoint_every" => self.checkpoint_every = parse(key, value)?,
            "max_doc_words" => self.max_doc_words = parse(key, value)?,
            "lm_order" => self.lm_order = parse(key, value)?,
            "lm_smoothing" => self.lm_smoothing = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Every set key with its value, in dump order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let paths = [
            ("corpus", &self.corpus),
            ("vocab", &self.vocab),
            ("tfidf", &self.tfidf),
            ("coverage_checkpoint", &self.coverage_checkpoint),
            ("lm_checkpoint", &self.lm_checkpoint),
            ("summarizer_checkpoint", &self.summarizer_checkpoint),
            ("out_dir", &self.out_dir),
        ];
        for (key, value) in paths {
            if let Some(p) = value {
                out.push((key, p.display().to_string()));
            }
        }
        out.extend([
            ("k", self.k.to_string()),
            ("budget", self.budget.to_string()),
            ("alpha", self.alpha.to_string()),
            ("beta", self.beta.to_string()),
            ("delta", self.delta.to_string()),
            ("proxy_len", self.proxy_len.to_string()),
            ("window", self.window.to_string()),
            ("frame_threshold", self.frame_threshold.to_string()),
            ("frame_rule", self.frame_rule.to_string()),
            ("rail_stacking", self.rail_stacking.to_string()),
            ("steps", self.steps.to_string()),
            ("seed", self.seed.to_string()),
        ]);
        if let Some(v) = self.lp_low {
            out.push(("lp_low", v.to_string()));
        }
        if let Some(v) = self.lp_high {
            out.push(("lp_high", v.to_string()));
        }
        out.extend([
            ("calibration_low", self.calibration_low.to_string()),
            ("calibration_high", self.calibration_high.to_string()),
            ("tfidf_sample", self.tfidf_sample.to_string()),
            ("cloze_backend", self.cloze_backend.clone()),
            ("coverage_epochs", self.coverage_epochs.to_string()),
            ("coverage_lr", self.coverage_lr.to_string()),
            ("step_size", self.step_size.to_string()),
            ("temperature", self.temperature.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("checkpoint_every", self.checkpoint_every.to_string()),
            ("max_doc_words", self.max_doc_words.to_string()),
            ("lm_order", self.lm_order.to_string()),
            ("lm_smoothing", self.lm_smoothing.to_string()),
        ]);
        out
    }

    pub fn dump(&self) -> String {
        let mut out = String::from("# summary-loop run configuration\n");
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Applies `key = value` lines on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Record {
                line: i + 1,
                message: format!("expected key = value, got {raw:?}"),
            })?;
            self.set(key.trim(), value.trim()).map_err(|e| Error::Record {
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.dump()).map_err(|e| Error::io(path, e))
    }
}
