//! HTTP/JSON client for the scoring service.

use std::time::Duration;

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::{EmbedError, EmbeddingVector};
use crate::raster::RasterImage;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("service returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed service response: {0}")]
    Protocol(String),
    #[error("service vectors: {0}")]
    Vectors(String),
}

#[derive(Debug, Clone)]
pub struct ClientConfig {
    pub timeout: Duration,
    /// Inputs per request.
    pub batch_size: usize,
    /// Concurrent requests per call.
    pub max_in_flight: usize,
    /// Sent as a bearer token when present.
    pub token: Option<String>,
}

impl Default for ClientConfig {
    fn default() -> Self {
        Self { timeout: Duration::from_secs(60), batch_size: 32, max_in_flight: 4, token: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeReply {
    pub reasoning: String,
    pub score: f64,
}

#[derive(Serialize)]
struct EmbedTextRequest<'a> {
    model_tag: &'a str,
    texts: &'a [&'a str],
}

#[derive(Serialize)]
struct EmbedImageRequest<'a> {
    model_tag: &'a str,
    images_png_b64: &'a [String],
}

#[derive(Serialize)]
struct JudgeRequest<'a> {
    prompt: &'a str,
    image_png_b64: &'a str,
}

#[derive(Deserialize)]
struct VectorsResponse {
    dim: usize,
    vectors: Vec<Vec<Option<f64>>>,
}

#[derive(Deserialize)]
struct HealthResponse {
    status: String,
}

#[derive(Clone)]
pub struct ServiceClient {
    base_url: String,
    agent: ureq::Agent,
    cfg: ClientConfig,
}

impl std::fmt::Debug for ServiceClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ServiceClient").field("base_url", &self.base_url).finish()
    }
}

impl ServiceClient {
    pub fn new(base_url: &str, cfg: ClientConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { base_url: base_url.trim_end_matches('/').to_string(), agent, cfg }
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base_url, path)
    }

    fn post<B: Serialize, R: for<'de> Deserialize<'de>>(&self, path: &str, body: &B) -> Result<R, ServiceError> {
        let mut req = self.agent.post(&self.url(path));
        if let Some(t) = &self.cfg.token {
            req = req.header("Authorization", &format!("Bearer {t}"));
        }
        let mut resp = req.send_json(body).map_err(|e| ServiceError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .with_config()
            .limit(256 * 1024 * 1024)
            .read_to_string()
            .map_err(|e| ServiceError::Transport(e.to_string()))?;
        if status != 200 {
            return Err(ServiceError::Status { status, body: text });
        }
        serde_json::from_str(&text).map_err(|e| {
            if text.contains("NaN") || text.contains("Infinity") {
                ServiceError::Vectors("non-finite values".to_string())
            } else {
                ServiceError::Protocol(e.to_string())
            }
        })
    }

    pub fn health(&self) -> Result<(), ServiceError> {
        let mut resp = self
            .agent
            .get(&self.url("/v1/health"))
            .call()
            .map_err(|e| ServiceError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| ServiceError::Transport(e.to_string()))?;
        if status != 200 {
            return Err(ServiceError::Status { status, body: text });
        }
        let h: HealthResponse = serde_json::from_str(&text).map_err(|e| ServiceError::Protocol(e.to_string()))?;
        if h.status != "ok" {
            return Err(ServiceError::Protocol(format!("health status {:?}", h.status)));
        }
        Ok(())
    }

    pub fn embed_text(&self, model_tag: &str, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        self.chunked(texts, |chunk| {
            self.post("/v1/embed_text", &EmbedTextRequest { model_tag, texts: chunk })
        })
    }

    pub fn embed_image(&self, model_tag: &str, images: &[&RasterImage]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let encoded = images
            .iter()
            .map(|img| {
                img.encode_png()
                    .map(|png| base64::engine::general_purpose::STANDARD.encode(png))
                    .map_err(|e| ServiceError::Protocol(e.to_string()))
            })
            .collect::<Result<Vec<String>, ServiceError>>()?;
        self.chunked(&encoded, |chunk| {
            self.post("/v1/embed_image", &EmbedImageRequest { model_tag, images_png_b64: chunk })
        })
    }

    pub fn judge(&self, prompt: &str, image: &RasterImage) -> Result<JudgeReply, ServiceError> {
        let png = image.encode_png().map_err(|e| ServiceError::Protocol(e.to_string()))?;
        let b64 = base64::engine::general_purpose::STANDARD.encode(png);
        self.post("/v1/judge", &JudgeRequest { prompt, image_png_b64: &b64 })
    }

    /// Sends `items` in chunks, at most `max_in_flight` at a time, and
    /// reassembles the vectors by chunk index.
    fn chunked<T: Sync>(
        &self,
        items: &[T],
        send: impl Fn(&[T]) -> Result<VectorsResponse, ServiceError> + Sync,
    ) -> Result<Vec<EmbeddingVector>, EmbedError> {
        if items.is_empty() {
            return Ok(Vec::new());
        }
        let chunks: Vec<&[T]> = items.chunks(self.cfg.batch_size.max(1)).collect();
        let mut replies: Vec<Option<Result<VectorsResponse, ServiceError>>> = Vec::new();
        replies.resize_with(chunks.len(), || None);
        let (send, chunks_ref) = (&send, &chunks);
        for wave in (0..chunks.len()).collect::<Vec<_>>().chunks(self.cfg.max_in_flight.max(1)) {
            std::thread::scope(|s| {
                let handles: Vec<_> =
                    wave.iter().map(|&i| (i, s.spawn(move || send(chunks_ref[i])))).collect();
                for (i, h) in handles {
                    replies[i] = Some(
                        h.join().unwrap_or_else(|_| Err(ServiceError::Transport("request thread panicked".into()))),
                    );
                }
            });
        }
        let mut out = Vec::with_capacity(items.len());
        let mut dim = None;
        for (chunk, reply) in chunks.iter().zip(replies) {
            let reply = reply.expect("every chunk answered")?;
            if reply.vectors.len() != chunk.len() {
                return Err(EmbedError::CountMismatch { expected: chunk.len(), got: reply.vectors.len() });
            }
            let expected = *dim.get_or_insert(reply.dim);
            if reply.dim != expected {
                return Err(EmbedError::DimensionMismatch(expected, reply.dim));
            }
            for row in reply.vectors {
                if row.len() != expected {
                    return Err(EmbedError::DimensionMismatch(expected, row.len()));
                }
                // JSON has no NaN; services typically send null for it.
                let values: Option<Vec<f64>> = row.into_iter().collect();
                let values = values.ok_or(EmbedError::NonFinite)?;
                out.push(EmbeddingVector::normalized(values)?);
            }
        }
        Ok(out)
    }
}
