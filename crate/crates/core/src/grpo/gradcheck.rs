//! Finite-difference verification of the surrogate gradient on small tables.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grpo::{normalize_advantages, ClipConfig, Rollout, RolloutGroup, ToyPolicy};

/// Ratios closer than this to a clip breakpoint are redrawn so central
/// differences never straddle a kink.
const KINK_MARGIN: f64 = 1e-3;
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct GradCheckInstance {
    pub policy: ToyPolicy,
    pub contexts: Vec<usize>,
    pub groups: Vec<RolloutGroup>,
    pub clip: ClipConfig,
}

impl GradCheckInstance {
    /// Random instance with vocab ≤ 8 and sequence length ≤ 6; the sampling
    /// policy is a perturbation of the current one so that some ratios clip.
    pub fn draw(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let clip = ClipConfig::default();
        loop {
            let n_ctx = rng.gen_range(1..=2);
            let positions = rng.gen_range(1..=6);
            let vocab = rng.gen_range(2..=8);
            let n = n_ctx * positions * vocab;
            let logits: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let old_logits: Vec<f64> = logits.iter().map(|l| l + rng.gen_range(-0.4..0.4)).collect();
            let policy = ToyPolicy::from_logits(n_ctx, positions, vocab, logits).expect("sized");
            let old = ToyPolicy::from_logits(n_ctx, positions, vocab, old_logits).expect("sized");

            let n_groups = rng.gen_range(1..=3);
            let mut contexts = Vec::new();
            let mut groups = Vec::new();
            for _ in 0..n_groups {
                let ctx = rng.gen_range(0..n_ctx);
                let g = rng.gen_range(2..=8);
                let mut samples = Vec::new();
                for _ in 0..g {
                    let mut tokens = old.sample(ctx, None, &mut rng);
                    tokens.truncate(rng.gen_range(1..=positions));
                    let logprob_old = old.sequence_logprobs(ctx, &tokens);
                    let logprob_new = policy.sequence_logprobs(ctx, &tokens);
                    samples.push(Rollout { token_ids: tokens, logprob_new, logprob_old, reward: rng.gen() });
                }
                let rewards: Vec<f64> = samples.iter().map(|s| s.reward).collect();
                let advantages = normalize_advantages(&rewards).expect("g >= 2");
                contexts.push(ctx);
                groups.push(RolloutGroup { caption: format!("ctx{ctx}"), samples, advantages });
            }
            let near_kink = groups.iter().flat_map(|g| &g.samples).any(|s| {
                s.logprob_new.iter().zip(&s.logprob_old).any(|(n, o)| {
                    let r = (n - o).exp();
                    (r - clip.lower()).abs() < KINK_MARGIN || (r - clip.upper()).abs() < KINK_MARGIN
                })
            });
            if !near_kink {
                return Self { policy, contexts, groups, clip };
            }
        }
    }

    pub fn objective_at(&self, policy: &ToyPolicy) -> f64 {
        policy.objective_and_grad(&self.contexts, &self.groups, &self.clip).expect("valid instance").0
    }

    pub fn analytic_gradient(&self) -> Vec<f64> {
        self.policy.objective_and_grad(&self.contexts, &self.groups, &self.clip).expect("valid instance").1
    }

    pub fn finite_difference_gradient(&self, h: f64) -> Vec<f64> {
        let mut p = self.policy.clone();
        (0..p.logits().len())
            .map(|i| {
                let base = p.logits()[i];
                p.logits_mut()[i] = base + h;
                let up = self.objective_at(&p);
                p.logits_mut()[i] = base - h;
                let down = self.objective_at(&p);
                p.logits_mut()[i] = base;
                (up - down) / (2.0 * h)
            })
            .collect()
    }
}

/// Componentwise `|a − b| / max(|a|, |b|, 1e-6)`, maximized.
pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-6))
        .fold(0.0, f64::max)
}

/// Largest relative error between the analytic and central-difference
/// gradients for the instance drawn from `seed`.
pub fn policy_gradient_check(seed: u64) -> f64 {
    let inst = GradCheckInstance::draw(seed);
    max_relative_error(&inst.analytic_gradient(), &inst.finite_difference_gradient(FD_STEP))
}

/// `1/N Σ_g 1/G Σ_i Â_i /|s_i| Σ_t ∇ log π(s_t)`, written from scratch.
pub fn reinforce_gradient(policy: &ToyPolicy, contexts: &[usize], groups: &[RolloutGroup]) -> Vec<f64> {
    let v = policy.vocab();
    let mut grad = vec![0.0; policy.logits().len()];
    for (&ctx, group) in contexts.iter().zip(groups) {
        let scale = 1.0 / (groups.len() as f64 * group.samples.len() as f64);
        for (s, a) in group.samples.iter().zip(&group.advantages) {
            for (pos, &tok) in s.token_ids.iter().enumerate() {
                let o = policy.row_offset(ctx, pos);
                let row = &policy.logits()[o..o + v];
                let z: f64 = row.iter().map(|l| l.exp()).sum();
                for k in 0..v {
                    let p = row[k].exp() / z;
                    let d = if k == tok { 1.0 - p } else { -p };
                    grad[o + k] += scale * a * d / s.token_ids.len() as f64;
                }
            }
        }
    }
    grad
}
