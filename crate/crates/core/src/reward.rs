//! Format-gated fusion of text-image and image-image similarity rewards.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::{cosine, EmbedError, Embedder};
use crate::program::{validate_and_render, ValidationReport};
use crate::raster::{RasterImage, RenderConfig};

#[derive(Debug, Error)]
pub enum RewardError {
    #[error("embedding failed: {0}")]
    Embed(#[from] EmbedError),
    #[error("embedder returned {0} vectors, expected 1")]
    Arity(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub lambda_text: f64,
    pub lambda_image: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self { lambda_text: 1.0, lambda_image: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub fmt: u8,
    pub r_text: Option<f64>,
    pub r_image: Option<f64>,
    pub fused: f64,
    pub validation: ValidationReport,
}

/// Maps a cosine in `[-1, 1]` to `[0, 1]`.
pub fn rescale_cosine(cos: f64) -> f64 {
    (cos + 1.0) / 2.0
}

/// `fmt · (λt·rt + λi·ri)`; absent terms contribute nothing.
pub fn fuse(fmt: u8, r_text: Option<f64>, r_image: Option<f64>, w: &RewardWeights) -> f64 {
    let inner = w.lambda_text * r_text.unwrap_or(0.0) + w.lambda_image * r_image.unwrap_or(0.0);
    f64::from(fmt) * inner
}

fn single(mut v: Vec<crate::embed::EmbeddingVector>) -> Result<crate::embed::EmbeddingVector, RewardError> {
    if v.len() != 1 {
        return Err(RewardError::Arity(v.len()));
    }
    Ok(v.pop().expect("length checked"))
}

pub fn text_reward(caption: &str, img: &RasterImage, embedder: &dyn Embedder) -> Result<f64, RewardError> {
    let t = single(embedder.embed_texts(&[caption])?)?;
    let v = single(embedder.embed_images(&[img])?)?;
    Ok(rescale_cosine(cosine(&t, &v)?))
}

pub fn image_reward(reference: &RasterImage, img: &RasterImage, embedder: &dyn Embedder) -> Result<f64, RewardError> {
    let mut v = embedder.embed_images(&[img, reference])?;
    if v.len() != 2 {
        return Err(RewardError::Arity(v.len()));
    }
    let z_gt = v.pop().expect("two vectors");
    let z_gen = v.pop().expect("two vectors");
    Ok(rescale_cosine(cosine(&z_gen, &z_gt)?))
}

/// Embedders for the two perceptual terms; either may be missing when its
/// weight is zero.
#[derive(Clone, Copy)]
pub struct Embedders<'a> {
    pub text: Option<&'a dyn Embedder>,
    pub image: Option<&'a dyn Embedder>,
}

impl<'a> Embedders<'a> {
    pub fn both(e: &'a dyn Embedder) -> Self {
        Self { text: Some(e), image: Some(e) }
    }
}

/// Gate first; perceptual terms are computed only for responses that pass
/// and only for terms with a positive weight.
pub fn fused_reward(
    raw_response: &str,
    caption: &str,
    reference: Option<&RasterImage>,
    weights: &RewardWeights,
    embedders: &Embedders<'_>,
    cfg: &RenderConfig,
) -> Result<RewardBreakdown, RewardError> {
    let checked = validate_and_render(raw_response, cfg);
    let fmt = checked.report.fmt_reward;
    let (mut r_text, mut r_image) = (None, None);
    if let (1, Some(img)) = (fmt, checked.image.as_ref()) {
        if weights.lambda_text > 0.0 {
            if let Some(e) = embedders.text {
                r_text = Some(text_reward(caption, img, e)?);
            }
        }
        if weights.lambda_image > 0.0 {
            if let (Some(e), Some(r)) = (embedders.image, reference) {
                r_image = Some(image_reward(r, img, e)?);
            }
        }
    }
    Ok(RewardBreakdown {
        fmt,
        r_text,
        r_image,
        fused: fuse(fmt, r_text, r_image, weights),
        validation: checked.report,
    })
}

/// One sample to score.
#[derive(Debug, Clone)]
pub struct ScoreInput {
    pub response: String,
    pub caption: String,
    pub reference: Option<RasterImage>,
}

/// Scores samples concurrently; output order matches input order.
pub fn score_batch(
    inputs: &[ScoreInput],
    weights: &RewardWeights,
    embedders: &Embedders<'_>,
    cfg: &RenderConfig,
) -> Vec<Result<RewardBreakdown, RewardError>> {
    inputs
        .par_iter()
        .map(|s| fused_reward(&s.response, &s.caption, s.reference.as_ref(), weights, embedders, cfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{EmbeddingVector, ReferenceEmbedder};
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Counting(AtomicUsize);

    impl Embedder for Counting {
        fn model_tag(&self) -> &str {
            "counting"
        }
        fn embed_texts(&self, t: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
            self.0.fetch_add(1, Ordering::SeqCst);
            ReferenceEmbedder.embed_texts(t)
        }
        fn embed_images(&self, i: &[&RasterImage]) -> Result<Vec<EmbeddingVector>, EmbedError> {
            self.0.fetch_add(1, Ordering::SeqCst);
            ReferenceEmbedder.embed_images(i)
        }
    }

    const VALID: &str = r#"<THINK>red</THINK><ANSWER><svg viewBox="0 0 4 4"><rect width="4" height="4" fill="red"/></svg></ANSWER>"#;

    #[test]
    fn rescale_points() {
        for (c, r) in [(-1.0, 0.0), (0.0, 0.5), (0.2, 0.6), (0.5, 0.75), (1.0, 1.0)] {
            assert!((rescale_cosine(c) - r).abs() < 1e-12);
        }
    }

    #[test]
    fn gate_failure_skips_embedders() {
        let probe = Counting(AtomicUsize::new(0));
        let bad = VALID.replace("<rect", "<text>hi</text><rect");
        let cfg = RenderConfig::with_size(8, 8);
        let w = RewardWeights { lambda_text: 1.0, lambda_image: 1.0 };
        let ref_img = RasterImage::filled(8, 8, crate::program::Color::WHITE);
        let b = fused_reward(&bad, "red", Some(&ref_img), &w, &Embedders::both(&probe), &cfg).unwrap();
        assert_eq!((b.fmt, b.fused, b.r_text, b.r_image), (0, 0.0, None, None));
        assert_eq!(probe.0.load(Ordering::SeqCst), 0);
        let ok = fused_reward(VALID, "red", Some(&ref_img), &w, &Embedders::both(&probe), &cfg).unwrap();
        assert_eq!(ok.fmt, 1);
        assert!(probe.0.load(Ordering::SeqCst) > 0);
    }

    #[test]
    fn image_reward_identity_and_orthogonal() {
        let red = RasterImage::filled(4, 4, crate::program::Color::rgb(255, 0, 0));
        let white = RasterImage::filled(4, 4, crate::program::Color::WHITE);
        assert_eq!(image_reward(&red, &red, &ReferenceEmbedder).unwrap(), 1.0);
        assert_eq!(image_reward(&red, &white, &ReferenceEmbedder).unwrap(), 0.5);
    }

    #[test]
    fn missing_reference_drops_image_term() {
        let cfg = RenderConfig::with_size(8, 8);
        let w = RewardWeights { lambda_text: 1.0, lambda_image: 1.0 };
        let b = fused_reward(VALID, "red", None, &w, &Embedders::both(&ReferenceEmbedder), &cfg).unwrap();
        assert_eq!(b.r_image, None);
        assert_eq!(b.fused, b.r_text.unwrap());
    }
}
