//! Embedding vectors, cosine similarity, reference embedders and the remote client.

mod client;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::raster::RasterImage;

pub use client::{ClientConfig, JudgeReply, ServiceClient, ServiceError};

pub const REFERENCE_DIM: usize = 64;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("embedding contains non-finite values")]
    NonFinite,
    #[error("cannot normalize a zero vector")]
    ZeroNorm,
    #[error("empty embedding")]
    Empty,
    #[error("remote embedder needs an endpoint")]
    MissingEndpoint,
    #[error("service returned {got} vectors for {expected} inputs")]
    CountMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Service(#[from] ServiceError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    /// Wraps raw values; rejects empty and non-finite input.
    pub fn new(values: Vec<f64>) -> Result<Self, EmbedError> {
        if values.is_empty() {
            return Err(EmbedError::Empty);
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(EmbedError::NonFinite);
        }
        Ok(Self { values })
    }

    /// Builds a unit vector from raw values.
    pub fn normalized(values: Vec<f64>) -> Result<Self, EmbedError> {
        Self::new(values)?.normalize()
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn normalize(&self) -> Result<Self, EmbedError> {
        // Scale first so huge components cannot overflow the sum of squares.
        let max = self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if max == 0.0 {
            return Err(EmbedError::ZeroNorm);
        }
        let scaled: Vec<f64> = self.values.iter().map(|v| v / max).collect();
        let n = scaled.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(Self { values: scaled.into_iter().map(|v| v / n).collect() })
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        let mut values = vec![0.0; dim];
        values[i] = 1.0;
        Self { values }
    }
}

/// Dot product of unit vectors, clamped to `[-1, 1]`. Identical vectors
/// give exactly 1 regardless of rounding in the sum.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbedError> {
    if a.dim() != b.dim() {
        return Err(EmbedError::DimensionMismatch(a.dim(), b.dim()));
    }
    if a.values == b.values {
        return Ok(1.0);
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    Ok(dot.clamp(-1.0, 1.0))
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Lowercased alphanumeric runs of `caption`.
pub fn tokenize(caption: &str) -> Vec<String> {
    caption
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

pub fn text_bin(token: &str) -> usize {
    (fnv1a64(token.as_bytes()) % REFERENCE_DIM as u64) as usize
}

pub fn color_bin(rgb: [u8; 3]) -> usize {
    16 * (rgb[0] as usize / 64) + 4 * (rgb[1] as usize / 64) + rgb[2] as usize / 64
}

fn from_counts(counts: &[u64; REFERENCE_DIM]) -> EmbeddingVector {
    if counts.iter().all(|&c| c == 0) {
        return EmbeddingVector::basis(REFERENCE_DIM, 0);
    }
    let norm = counts.iter().map(|&c| (c as f64) * (c as f64)).sum::<f64>().sqrt();
    EmbeddingVector { values: counts.iter().map(|&c| c as f64 / norm).collect() }
}

/// Hashed bag-of-words over 64 bins; the empty caption maps to `e0`.
pub fn reference_embed_text(caption: &str) -> EmbeddingVector {
    let mut counts = [0u64; REFERENCE_DIM];
    for t in tokenize(caption) {
        counts[text_bin(&t)] += 1;
    }
    from_counts(&counts)
}

/// 4×4×4 RGB histogram.
pub fn reference_embed_image(img: &RasterImage) -> EmbeddingVector {
    let mut counts = [0u64; REFERENCE_DIM];
    for p in img.pixels() {
        counts[color_bin(p)] += 1;
    }
    from_counts(&counts)
}

pub trait Embedder: Send + Sync {
    fn model_tag(&self) -> &str;
    fn embed_texts(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError>;
    fn embed_images(&self, images: &[&RasterImage]) -> Result<Vec<EmbeddingVector>, EmbedError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ReferenceEmbedder;

impl Embedder for ReferenceEmbedder {
    fn model_tag(&self) -> &str {
        "reference-hist64"
    }

    fn embed_texts(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        Ok(texts.iter().map(|t| reference_embed_text(t)).collect())
    }

    fn embed_images(&self, images: &[&RasterImage]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        Ok(images.iter().map(|i| reference_embed_image(i)).collect())
    }
}

/// Service-backed embedder with a per-run memo of text embeddings.
pub struct RemoteEmbedder {
    client: ServiceClient,
    model_tag: String,
    text_memo: Mutex<HashMap<String, EmbeddingVector>>,
}

impl RemoteEmbedder {
    pub fn new(client: ServiceClient, model_tag: impl Into<String>) -> Self {
        Self { client, model_tag: model_tag.into(), text_memo: Mutex::new(HashMap::new()) }
    }
}

impl Embedder for RemoteEmbedder {
    fn model_tag(&self) -> &str {
        &self.model_tag
    }

    fn embed_texts(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let missing: Vec<&str> = {
            let memo = self.text_memo.lock().expect("memo lock");
            let mut seen = std::collections::HashSet::new();
            texts.iter().copied().filter(|t| !memo.contains_key(*t) && seen.insert(*t)).collect()
        };
        if !missing.is_empty() {
            let vectors = self.client.embed_text(&self.model_tag, &missing)?;
            let mut memo = self.text_memo.lock().expect("memo lock");
            for (t, v) in missing.iter().zip(vectors) {
                memo.insert((*t).to_string(), v);
            }
        }
        let memo = self.text_memo.lock().expect("memo lock");
        Ok(texts.iter().map(|t| memo[*t].clone()).collect())
    }

    fn embed_images(&self, images: &[&RasterImage]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        Ok(self.client.embed_image(&self.model_tag, images)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbedderKind {
    Reference,
    Remote,
}

/// Serializable description of an embedder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbedderHandle {
    pub kind: EmbedderKind,
    pub endpoint: Option<String>,
    pub model_tag: String,
}

impl EmbedderHandle {
    pub fn reference() -> Self {
        Self { kind: EmbedderKind::Reference, endpoint: None, model_tag: "reference-hist64".to_string() }
    }

    pub fn remote(endpoint: impl Into<String>, model_tag: impl Into<String>) -> Self {
        Self { kind: EmbedderKind::Remote, endpoint: Some(endpoint.into()), model_tag: model_tag.into() }
    }

    pub fn connect(&self, cfg: &ClientConfig) -> Result<Arc<dyn Embedder>, EmbedError> {
        match self.kind {
            EmbedderKind::Reference => Ok(Arc::new(ReferenceEmbedder)),
            EmbedderKind::Remote => {
                let endpoint = self.endpoint.as_deref().ok_or(EmbedError::MissingEndpoint)?;
                let client = ServiceClient::new(endpoint, cfg.clone());
                Ok(Arc::new(RemoteEmbedder::new(client, self.model_tag.clone())))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::Color;

    #[test]
    fn cosine_basics() {
        let e1 = EmbeddingVector::basis(3, 0);
        let e2 = EmbeddingVector::basis(3, 1);
        assert_eq!(cosine(&e1, &e1).unwrap(), 1.0);
        assert_eq!(cosine(&e1, &e2).unwrap(), 0.0);
        let mix = EmbeddingVector::normalized(vec![1.0, 1.0, 0.0]).unwrap();
        assert!((cosine(&e1, &mix).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-7);
        assert!(cosine(&e1, &EmbeddingVector::basis(2, 0)).is_err());
    }

    #[test]
    fn fnv_known_vectors() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn text_embedding_cases() {
        assert_eq!(reference_embed_text(""), EmbeddingVector::basis(64, 0));
        assert_eq!(reference_embed_text("  ,;"), EmbeddingVector::basis(64, 0));
        assert_eq!(reference_embed_text("red red"), reference_embed_text("red"));
        assert_eq!(reference_embed_text("Red, CIRCLE"), reference_embed_text("red circle"));
    }

    #[test]
    fn image_histogram_cases() {
        let red = RasterImage::filled(4, 4, Color::rgb(255, 0, 0));
        assert_eq!(reference_embed_image(&red), EmbeddingVector::basis(64, 48));
        let white = RasterImage::filled(4, 4, Color::WHITE);
        assert_eq!(reference_embed_image(&white), EmbeddingVector::basis(64, 63));
    }

    #[test]
    fn normalize_rejects_zero_and_nan() {
        assert!(EmbeddingVector::normalized(vec![0.0, 0.0]).is_err());
        assert!(EmbeddingVector::new(vec![f64::NAN]).is_err());
        let v = EmbeddingVector::normalized(vec![1e300, 1e300]).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }
}
