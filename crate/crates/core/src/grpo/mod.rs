//! Group-relative advantages, the asymmetrically clipped surrogate, and a
//! tabular toy policy trained end to end.

mod gradcheck;
mod policy;
mod toy;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use gradcheck::{policy_gradient_check, reinforce_gradient, GradCheckInstance};
pub use policy::{ToyPolicy, SNAPSHOT_MAGIC};
pub use toy::{
    train_toy, train_toy_with, ToyGrammar, ToyScore, ToyToken, TraceRecord, TrainConfig, TrainOutcome,
    TOY_COLORS, TOY_SHAPES,
};

/// Groups whose reward std falls below this get all-zero advantages.
pub const STD_EPSILON: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum GrpoError {
    #[error("group needs at least 2 rewards, got {0}")]
    GroupTooSmall(usize),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("sample {0}: logprob arrays differ in length or are empty")]
    BadSample(usize),
    #[error("{samples} samples but {advantages} advantages")]
    AdvantageCount { samples: usize, advantages: usize },
    #[error("caption {0:?} is not in the toy grammar")]
    UnknownCaption(String),
    #[error("bad policy snapshot: {0}")]
    Snapshot(String),
}

/// Standardizes rewards to zero mean and unit population std.
///
/// Deviations are taken from the first reward before averaging, so adding a
/// constant that shifts every reward exactly leaves the output bit-identical.
pub fn normalize_advantages(rewards: &[f64]) -> Result<Vec<f64>, GrpoError> {
    if rewards.len() < 2 {
        return Err(GrpoError::GroupTooSmall(rewards.len()));
    }
    if !rewards.iter().all(|r| r.is_finite()) {
        return Err(GrpoError::NonFinite("rewards"));
    }
    let g = rewards.len() as f64;
    let pivot = rewards[0];
    let d: Vec<f64> = rewards.iter().map(|r| r - pivot).collect();
    let mean = d.iter().sum::<f64>() / g;
    let centered: Vec<f64> = d.iter().map(|x| x - mean).collect();
    let std = (centered.iter().map(|x| x * x).sum::<f64>() / g).sqrt();
    if std < STD_EPSILON {
        return Ok(vec![0.0; rewards.len()]);
    }
    Ok(centered.into_iter().map(|x| x / std).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipConfig {
    pub clip_low: f64,
    pub clip_high: f64,
}

impl Default for ClipConfig {
    fn default() -> Self {
        Self { clip_low: 0.20, clip_high: 0.28 }
    }
}

impl ClipConfig {
    pub fn lower(&self) -> f64 {
        1.0 - self.clip_low
    }

    pub fn upper(&self) -> f64 {
        1.0 + self.clip_high
    }
}

/// `min(r·A, clip(r, 1−ε_low, 1+ε_high)·A)`.
pub fn surrogate_term(ratio: f64, advantage: f64, clip: &ClipConfig) -> f64 {
    let clipped = ratio.clamp(clip.lower(), clip.upper());
    (ratio * advantage).min(clipped * advantage)
}

/// Derivative of [`surrogate_term`] with respect to the ratio.
pub fn surrogate_slope(ratio: f64, advantage: f64, clip: &ClipConfig) -> f64 {
    let clipped = ratio.clamp(clip.lower(), clip.upper());
    if ratio * advantage <= clipped * advantage {
        advantage
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rollout {
    pub token_ids: Vec<usize>,
    pub logprob_new: Vec<f64>,
    pub logprob_old: Vec<f64>,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutGroup {
    pub caption: String,
    pub samples: Vec<Rollout>,
    pub advantages: Vec<f64>,
}

impl RolloutGroup {
    /// Drops errored samples (`None` reward) and normalizes the rest.
    /// Returns `None` when fewer than two samples survive.
    pub fn from_scored(caption: &str, scored: Vec<(Rollout, Option<f64>)>) -> Result<Option<Self>, GrpoError> {
        let samples: Vec<Rollout> = scored
            .into_iter()
            .filter_map(|(mut r, reward)| {
                reward.map(|v| {
                    r.reward = v;
                    r
                })
            })
            .collect();
        if samples.len() < 2 {
            return Ok(None);
        }
        let rewards: Vec<f64> = samples.iter().map(|s| s.reward).collect();
        let advantages = normalize_advantages(&rewards)?;
        Ok(Some(Self { caption: caption.to_string(), samples, advantages }))
    }

    fn check(&self) -> Result<(), GrpoError> {
        if self.samples.len() != self.advantages.len() {
            return Err(GrpoError::AdvantageCount {
                samples: self.samples.len(),
                advantages: self.advantages.len(),
            });
        }
        for (i, s) in self.samples.iter().enumerate() {
            if s.logprob_new.is_empty() || s.logprob_new.len() != s.logprob_old.len() {
                return Err(GrpoError::BadSample(i));
            }
            if !s.logprob_new.iter().chain(&s.logprob_old).all(|v| v.is_finite()) {
                return Err(GrpoError::NonFinite("logprobs"));
            }
        }
        Ok(())
    }
}

/// `1/G Σ_i 1/|s_i| Σ_t min(r·Â, clip(r)·Â)` with `r = exp(new − old)`.
pub fn grpo_objective(group: &RolloutGroup, clip: &ClipConfig) -> Result<f64, GrpoError> {
    group.check()?;
    let g = group.samples.len() as f64;
    let mut total = 0.0;
    for (s, &a) in group.samples.iter().zip(&group.advantages) {
        let per_token: f64 = s
            .logprob_new
            .iter()
            .zip(&s.logprob_old)
            .map(|(n, o)| surrogate_term((n - o).exp(), a, clip))
            .sum();
        total += per_token / s.logprob_new.len() as f64;
    }
    Ok(total / g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn advantage_examples() {
        assert_eq!(normalize_advantages(&[1.0, 0.0, 1.0, 0.0]).unwrap(), vec![1.0, -1.0, 1.0, -1.0]);
        assert_eq!(normalize_advantages(&[0.7, 0.7, 0.7]).unwrap(), vec![0.0; 3]);
        let a = normalize_advantages(&[0.2, 0.5, 0.8]).unwrap();
        let expect = [-1.224744871391589, 0.0, 1.224744871391589];
        for (x, y) in a.iter().zip(expect) {
            assert!((x - y).abs() < 1e-9);
        }
        assert_eq!(normalize_advantages(&[1.0]), Err(GrpoError::GroupTooSmall(1)));
    }

    #[test]
    fn surrogate_examples() {
        let c = ClipConfig::default();
        assert!((surrogate_term(1.5, 1.0, &c) - 1.28).abs() < 1e-15);
        assert!((surrogate_term(0.5, -1.0, &c) + 0.8).abs() < 1e-15);
        assert_eq!(surrogate_term(1.1, 2.5, &c), 1.1 * 2.5);
    }

    #[test]
    fn ratio_one_objective_is_mean_advantage() {
        let mk = |r: f64| Rollout { token_ids: vec![0, 1], logprob_new: vec![-0.5, -1.0], logprob_old: vec![-0.5, -1.0], reward: r };
        let g = RolloutGroup::from_scored("c", vec![(mk(0.0), Some(0.1)), (mk(0.0), Some(0.9)), (mk(0.0), Some(0.4))])
            .unwrap()
            .unwrap();
        assert!(grpo_objective(&g, &ClipConfig::default()).unwrap().abs() < 1e-15);
    }

    #[test]
    fn errored_samples_are_dropped() {
        let mk = || Rollout { token_ids: vec![0], logprob_new: vec![-1.0], logprob_old: vec![-1.0], reward: 0.0 };
        let g = RolloutGroup::from_scored("c", vec![(mk(), Some(1.0)), (mk(), None), (mk(), Some(0.0))]).unwrap().unwrap();
        assert_eq!(g.samples.len(), 2);
        assert!(RolloutGroup::from_scored("c", vec![(mk(), Some(1.0)), (mk(), None)]).unwrap().is_none());
    }
}
