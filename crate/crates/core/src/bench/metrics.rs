//! Embedding-based evaluation metrics.

use thiserror::Error;

use crate::embed::{cosine, EmbedError, Embedder};
use crate::raster::RasterImage;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("at least one embedder is required")]
    NoEmbedders,
    #[error("diversity needs at least 2 images, got {0}")]
    TooFewImages(usize),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

/// Mean over embedders of the raw caption/image cosine.
pub fn clip_style_score(caption: &str, image: &RasterImage, embedders: &[&dyn Embedder]) -> Result<f64, MetricError> {
    if embedders.is_empty() {
        return Err(MetricError::NoEmbedders);
    }
    let mut sum = 0.0;
    for e in embedders {
        let t = e.embed_texts(&[caption])?;
        let i = e.embed_images(&[image])?;
        let (t, i) = t.first().zip(i.first()).ok_or(EmbedError::Empty)?;
        sum += cosine(t, i)?;
    }
    Ok(sum / embedders.len() as f64)
}

/// `1 − mean` of pairwise image cosines over all unordered pairs and embedders.
pub fn diversity_score(images: &[&RasterImage], embedders: &[&dyn Embedder]) -> Result<f64, MetricError> {
    if images.len() < 2 {
        return Err(MetricError::TooFewImages(images.len()));
    }
    if embedders.is_empty() {
        return Err(MetricError::NoEmbedders);
    }
    let (mut sum, mut n) = (0.0, 0usize);
    for e in embedders {
        let v = e.embed_images(images)?;
        if v.len() != images.len() {
            return Err(EmbedError::CountMismatch { expected: images.len(), got: v.len() }.into());
        }
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                sum += cosine(&v[i], &v[j])?;
                n += 1;
            }
        }
    }
    Ok(1.0 - sum / n as f64)
}
