use rand::Rng;

use crate::grpo::{grpo_objective, surrogate_slope, ClipConfig, GrpoError, RolloutGroup};

pub const SNAPSHOT_MAGIC: &[u8; 16] = b"SGPTOYPOLICY\0\0\0\0";
const SNAPSHOT_VERSION: u32 = 1;

/// Tabular softmax policy: one logit row per (context, position).
#[derive(Debug, Clone, PartialEq)]
pub struct ToyPolicy {
    contexts: usize,
    positions: usize,
    vocab: usize,
    logits: Vec<f64>,
}

impl ToyPolicy {
    pub fn zeros(contexts: usize, positions: usize, vocab: usize) -> Self {
        Self { contexts, positions, vocab, logits: vec![0.0; contexts * positions * vocab] }
    }

    pub fn from_logits(contexts: usize, positions: usize, vocab: usize, logits: Vec<f64>) -> Result<Self, GrpoError> {
        if logits.len() != contexts * positions * vocab {
            return Err(GrpoError::Snapshot(format!(
                "expected {} logits, got {}",
                contexts * positions * vocab,
                logits.len()
            )));
        }
        Ok(Self { contexts, positions, vocab, logits })
    }

    pub fn contexts(&self) -> usize {
        self.contexts
    }

    pub fn positions(&self) -> usize {
        self.positions
    }

    pub fn vocab(&self) -> usize {
        self.vocab
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn logits_mut(&mut self) -> &mut [f64] {
        &mut self.logits
    }

    pub fn row_offset(&self, ctx: usize, pos: usize) -> usize {
        (ctx * self.positions + pos) * self.vocab
    }

    pub fn probs(&self, ctx: usize, pos: usize) -> Vec<f64> {
        let o = self.row_offset(ctx, pos);
        softmax(&self.logits[o..o + self.vocab])
    }

    pub fn log_probs(&self, ctx: usize, pos: usize) -> Vec<f64> {
        let o = self.row_offset(ctx, pos);
        let row = &self.logits[o..o + self.vocab];
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
        row.iter().map(|l| l - lse).collect()
    }

    /// Samples up to `positions` tokens, stopping after `eos` if drawn.
    pub fn sample<R: Rng>(&self, ctx: usize, eos: Option<usize>, rng: &mut R) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.positions);
        for pos in 0..self.positions {
            let p = self.probs(ctx, pos);
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut tok = self.vocab - 1;
            for (k, pk) in p.iter().enumerate() {
                acc += pk;
                if u < acc {
                    tok = k;
                    break;
                }
            }
            out.push(tok);
            if Some(tok) == eos {
                break;
            }
        }
        out
    }

    pub fn sequence_logprobs(&self, ctx: usize, tokens: &[usize]) -> Vec<f64> {
        tokens.iter().enumerate().map(|(pos, &t)| self.log_probs(ctx, pos)[t]).collect()
    }

    /// Mean softmax entropy over all rows, in nats.
    pub fn mean_entropy(&self) -> f64 {
        let rows = self.contexts * self.positions;
        let total: f64 = (0..self.contexts)
            .flat_map(|c| (0..self.positions).map(move |p| (c, p)))
            .map(|(c, p)| {
                let lp = self.log_probs(c, p);
                -lp.iter().map(|l| l.exp() * l).sum::<f64>()
            })
            .sum();
        total / rows as f64
    }

    /// Mean of the surrogate objective over `groups` (group `j` conditioned
    /// on context `contexts[j]`), with `logprob_new` recomputed from this
    /// policy, and its exact gradient with respect to the logits.
    pub fn objective_and_grad(
        &self,
        contexts: &[usize],
        groups: &[RolloutGroup],
        clip: &ClipConfig,
    ) -> Result<(f64, Vec<f64>), GrpoError> {
        let mut grad = vec![0.0; self.logits.len()];
        if groups.is_empty() {
            return Ok((0.0, grad));
        }
        let n_groups = groups.len() as f64;
        let mut objective = 0.0;
        for (&ctx, group) in contexts.iter().zip(groups) {
            let mut g = group.clone();
            for s in &mut g.samples {
                s.logprob_new = self.sequence_logprobs(ctx, &s.token_ids);
            }
            objective += grpo_objective(&g, clip)?;
            let size = g.samples.len() as f64;
            for (s, &a) in g.samples.iter().zip(&g.advantages) {
                let len = s.token_ids.len() as f64;
                for (pos, &tok) in s.token_ids.iter().enumerate() {
                    let r = (s.logprob_new[pos] - s.logprob_old[pos]).exp();
                    let coef = surrogate_slope(r, a, clip) * r / (n_groups * size * len);
                    if coef == 0.0 {
                        continue;
                    }
                    let o = self.row_offset(ctx, pos);
                    let p = self.probs(ctx, pos);
                    for (k, pk) in p.iter().enumerate() {
                        let onehot = if k == tok { 1.0 } else { 0.0 };
                        grad[o + k] += coef * (onehot - pk);
                    }
                }
            }
        }
        Ok((objective / n_groups, grad))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + self.logits.len() * 8);
        out.extend_from_slice(SNAPSHOT_MAGIC);
        for v in [SNAPSHOT_VERSION, self.contexts as u32, self.positions as u32, self.vocab as u32] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for l in &self.logits {
            out.extend_from_slice(&l.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, GrpoError> {
        if bytes.len() < 32 || &bytes[..16] != SNAPSHOT_MAGIC {
            return Err(GrpoError::Snapshot("missing magic header".to_string()));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[16 + 4 * i..20 + 4 * i].try_into().expect("4 bytes")) as usize;
        if word(0) != SNAPSHOT_VERSION as usize {
            return Err(GrpoError::Snapshot(format!("unsupported version {}", word(0))));
        }
        let (c, p, v) = (word(1), word(2), word(3));
        let body = &bytes[32..];
        if body.len() != c * p * v * 8 {
            return Err(GrpoError::Snapshot("table size does not match header".to_string()));
        }
        let logits = body.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes"))).collect();
        Self::from_logits(c, p, v, logits)
    }
}

fn softmax(row: &[f64]) -> Vec<f64> {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = row.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|x| x / z).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rows_sum_to_one() {
        let mut p = ToyPolicy::zeros(2, 3, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for l in p.logits_mut() {
            *l = rng.gen_range(-30.0..30.0);
        }
        for c in 0..2 {
            for pos in 0..3 {
                assert!((p.probs(c, pos).iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn snapshot_round_trip() {
        let p = ToyPolicy::from_logits(1, 2, 2, vec![0.5, -1.0, 2.0, 3.25]).unwrap();
        let bytes = p.to_bytes();
        assert_eq!(&bytes[..16], b"SGPTOYPOLICY\0\0\0\0");
        assert_eq!(bytes.len(), 32 + 4 * 8);
        assert_eq!(ToyPolicy::from_bytes(&bytes).unwrap(), p);
        assert!(ToyPolicy::from_bytes(&bytes[..40]).is_err());
    }

    #[test]
    fn uniform_entropy_is_log_vocab() {
        assert!((ToyPolicy::zeros(3, 2, 7).mean_entropy() - 7f64.ln()).abs() < 1e-12);
    }
}
