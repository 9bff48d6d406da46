//! Desk-scale GRPO: a tabular policy emits SVG element tokens for
//! "{color} {shape}" captions and is rewarded by the fused reward.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::{text_bin, Embedder};
use crate::grpo::{ClipConfig, GrpoError, Rollout, RolloutGroup, ToyPolicy};
use crate::program::Color;
use crate::raster::RenderConfig;
use crate::reward::{fused_reward, Embedders, RewardWeights};

pub const TOY_COLORS: [&str; 8] = ["red", "green", "blue", "yellow", "purple", "orange", "black", "white"];
pub const TOY_SHAPES: [&str; 4] = ["circle", "square", "triangle", "diamond"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToyToken {
    Eos,
    /// Shape filled with the color word's swatch and outlined with the shape word's swatch.
    Element { color: usize, shape: usize },
    /// Emits a `<text>` element, which the format gate rejects.
    BannedText,
    /// Emits a group with a singular transform, which fails to render.
    SingularGroup,
}

#[derive(Debug, Clone)]
pub struct ToyGrammar {
    pub colors: Vec<String>,
    pub shapes: Vec<String>,
}

impl Default for ToyGrammar {
    fn default() -> Self {
        Self {
            colors: TOY_COLORS.iter().map(|s| s.to_string()).collect(),
            shapes: TOY_SHAPES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl ToyGrammar {
    pub fn captions(&self) -> Vec<String> {
        self.colors.iter().flat_map(|c| self.shapes.iter().map(move |s| format!("{c} {s}"))).collect()
    }

    pub fn vocabulary(&self) -> Vec<ToyToken> {
        let mut v = vec![ToyToken::Eos];
        for color in 0..self.colors.len() {
            for shape in 0..self.shapes.len() {
                v.push(ToyToken::Element { color, shape });
            }
        }
        v.push(ToyToken::BannedText);
        v.push(ToyToken::SingularGroup);
        v
    }

    /// Swatch whose reference-histogram bin equals the word's text-hash bin,
    /// so drawing in it moves the image embedding toward the word.
    pub fn swatch(word: &str) -> Color {
        let b = text_bin(word) as u8;
        Color::rgb(32 + 64 * (b / 16), 32 + 64 * ((b / 4) % 4), 32 + 64 * (b % 4))
    }

    fn element_svg(&self, color: usize, shape: usize) -> String {
        let fill = Self::swatch(&self.colors[color]);
        let stroke = Self::swatch(&self.shapes[shape]);
        let paint = format!(r#"fill="{fill}" stroke="{stroke}" stroke-width="12""#);
        match shape % 4 {
            0 => format!(r#"<circle cx="32" cy="32" r="26" {paint}/>"#),
            1 => format!(r#"<rect x="8" y="8" width="48" height="48" {paint}/>"#),
            2 => format!(r#"<polygon points="32,6 60,58 4,58" {paint}/>"#),
            _ => format!(r#"<polygon points="32,2 62,32 32,62 2,32" {paint}/>"#),
        }
    }

    /// Full model response for a caption and token sequence.
    pub fn response(&self, caption: &str, tokens: &[usize]) -> String {
        let vocab = self.vocabulary();
        let mut body = String::new();
        for &t in tokens {
            match vocab[t] {
                ToyToken::Eos => break,
                ToyToken::Element { color, shape } => body.push_str(&self.element_svg(color, shape)),
                ToyToken::BannedText => body.push_str(&format!(r#"<text x="4" y="60">{caption}</text>"#)),
                ToyToken::SingularGroup => {
                    body.push_str(r#"<g transform="scale(0)"><rect width="64" height="64"/></g>"#)
                }
            }
        }
        format!(
            r#"<THINK>{caption}</THINK><ANSWER><svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 64 64">{body}</svg></ANSWER>"#
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub iters: usize,
    pub group_size: usize,
    pub learning_rate: f64,
    /// Optimizer steps per batch of rollouts.
    pub epochs: usize,
    pub max_len: usize,
    pub render_size: u32,
    pub clip: ClipConfig,
    pub weights: RewardWeights,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iters: 200,
            group_size: 8,
            learning_rate: 1e-2,
            epochs: 8,
            max_len: 3,
            render_size: 32,
            clip: ClipConfig::default(),
            weights: RewardWeights::default(),
            seed: 17,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub mean_reward: f64,
    pub fmt_rate: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub trace: Vec<TraceRecord>,
    pub policy: ToyPolicy,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize, lr: f64) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0, lr }
    }

    /// Gradient ascent step.
    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::B1 * self.m[i] + (1.0 - Self::B1) * grad[i];
            self.v[i] = Self::B2 * self.v[i] + (1.0 - Self::B2) * grad[i] * grad[i];
            params[i] += self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}

struct Scored {
    rollout: Rollout,
    reward: Option<f64>,
    fmt: u8,
}

/// Outcome of scoring one response: fused reward (`None` when scoring
/// errored) and the format gate bit.
pub type ToyScore = (Option<f64>, u8);

/// Runs `cfg.iters` GRPO updates with the fused reward under `embedder`.
pub fn train_toy(
    grammar: &ToyGrammar,
    captions: &[String],
    cfg: &TrainConfig,
    embedder: &dyn Embedder,
) -> Result<TrainOutcome, GrpoError> {
    let render_cfg = RenderConfig::with_size(cfg.render_size, cfg.render_size);
    let embedders = Embedders { text: Some(embedder), image: None };
    let score = |caption: &str, text: &str| -> ToyScore {
        match fused_reward(text, caption, None, &cfg.weights, &embedders, &render_cfg) {
            Ok(b) => (Some(b.fused), b.fmt),
            Err(e) => {
                log::warn!("toy rollout scoring failed: {e}");
                (None, 0)
            }
        }
    };
    train_toy_with(grammar, captions, cfg, &score)
}

/// Runs `cfg.iters` GRPO updates and one final evaluation pass.
///
/// Record `i` describes rollouts drawn before update `i`; the last record
/// is evaluation only. Each (iteration, caption) pair has its own RNG
/// stream, so the trace does not depend on thread scheduling.
pub fn train_toy_with(
    grammar: &ToyGrammar,
    captions: &[String],
    cfg: &TrainConfig,
    score: &(dyn Fn(&str, &str) -> ToyScore + Sync),
) -> Result<TrainOutcome, GrpoError> {
    let known = grammar.captions();
    if let Some(bad) = captions.iter().find(|c| !known.contains(c)) {
        return Err(GrpoError::UnknownCaption(bad.clone()));
    }
    if cfg.group_size < 2 {
        return Err(GrpoError::GroupTooSmall(cfg.group_size));
    }
    let vocab = grammar.vocabulary();
    let eos = vocab.iter().position(|t| *t == ToyToken::Eos);
    let mut policy = ToyPolicy::zeros(captions.len(), cfg.max_len, vocab.len());
    let mut adam = Adam::new(policy.logits().len(), cfg.learning_rate);
    let mut trace = Vec::with_capacity(cfg.iters + 1);

    for iter in 0..=cfg.iters {
        let sampler = policy.clone();
        let batches: Vec<Vec<Scored>> = captions
            .par_iter()
            .enumerate()
            .map(|(ci, caption)| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(((iter as u64) << 32) | ci as u64);
                (0..cfg.group_size)
                    .map(|_| {
                        let tokens = sampler.sample(ci, eos, &mut rng);
                        let text = grammar.response(caption, &tokens);
                        let (reward, fmt) = score(caption, &text);
        let logprob_old = sampler.sequence_logprobs(ci, &tokens);
                        let rollout = Rollout {
                            token_ids: tokens,
                            logprob_new: logprob_old.clone(),
                            logprob_old,
                            reward: reward.unwrap_or(0.0),
                        };
                        Scored { rollout, reward, fmt }
                    })
                    .collect()
            })
            .collect();

        let all: Vec<&Scored> = batches.iter().flatten().collect();
        let rewards: Vec<f64> = all.iter().filter_map(|s| s.reward).collect();
        let mean_reward = if rewards.is_empty() { 0.0 } else { rewards.iter().sum::<f64>() / rewards.len() as f64 };
        let fmt_rate = all.iter().filter(|s| s.fmt == 1).count() as f64 / all.len().max(1) as f64;
        trace.push(TraceRecord { iter, mean_reward, fmt_rate, entropy: sampler.mean_entropy() });
        log::debug!("iter {iter}: reward {mean_reward:.4} fmt {fmt_rate:.3}");
        if iter == cfg.iters {
            break;
        }

        let mut contexts = Vec::new();
        let mut groups = Vec::new();
        for (ci, batch) in batches.into_iter().enumerate() {
            let scored = batch.into_iter().map(|s| (s.rollout, s.reward)).collect();
            if let Some(g) = RolloutGroup::from_scored(&captions[ci], scored)? {
                contexts.push(ci);
                groups.push(g);
            }
        }
        for _ in 0..cfg.epochs {
            let (_, grad) = policy.objective_and_grad(&contexts, &groups, &cfg.clip)?;
            adam.step(policy.logits_mut(), &grad);
        }
    }
    Ok(TrainOutcome { trace, policy })
}
