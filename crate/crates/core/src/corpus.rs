//! Caption/SVG corpora: text-content filtering and seeded source mixing.

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::program::check_banned_tags;

/// Caption words that signal rendered text in the target image.
pub const TEXT_KEYWORDS: [&str; 25] = [
    "text", "word", "letter", "character", "symbol", "number", "digit", "font", "script", "write", "written",
    "writing", "typography", "label", "caption", "title", "name", "sign", "signature", "logo", "slogan", "spell",
    "phrase", "quote", "message",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SourceTag {
    #[serde(rename = "coco-like")]
    CocoLike,
    #[serde(rename = "svg-collection")]
    SvgCollection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    #[serde(default)]
    pub caption: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg_source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ref_image_path: Option<PathBuf>,
    pub source_tag: SourceTag,
    /// Precomputed external judgment of whether the image contains text.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contains_text: Option<bool>,
    /// Fields this crate does not interpret, kept for rewriting.
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl CorpusRecord {
    pub fn new(id: &str, caption: &str, source_tag: SourceTag) -> Self {
        Self {
            id: id.to_string(),
            caption: caption.to_string(),
            svg_source: None,
            ref_image_path: None,
            source_tag,
            contains_text: None,
            extra: Default::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum DropReason {
    Tag { tag: String },
    Keyword { words: Vec<String> },
    Flagged,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "decision", rename_all = "snake_case")]
pub enum FilterDecision {
    Keep,
    Drop(DropReason),
}

impl FilterDecision {
    pub fn keep(&self) -> bool {
        matches!(self, FilterDecision::Keep)
    }
}

/// Whole-word, case-insensitive keyword matcher.
#[derive(Debug, Clone)]
pub struct KeywordFilter {
    re: Regex,
}

impl Default for KeywordFilter {
    fn default() -> Self {
        Self::new(&TEXT_KEYWORDS).expect("built-in keywords are valid")
    }
}

impl KeywordFilter {
    pub fn new<S: AsRef<str>>(words: &[S]) -> Result<Self, regex::Error> {
        let alts: Vec<String> = words.iter().map(|w| regex::escape(w.as_ref())).collect();
        let pattern = if alts.is_empty() { "[^\\s\\S]".to_string() } else { format!(r"(?i)\b(?:{})\b", alts.join("|")) };
        Ok(Self { re: Regex::new(&pattern)? })
    }

    /// Distinct matched keywords, lowercased, in order of first appearance.
    pub fn matches(&self, text: &str) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for m in self.re.find_iter(text) {
            let w = m.as_str().to_lowercase();
            if !out.contains(&w) {
                out.push(w);
            }
        }
        out
    }
}

/// Drops records whose SVG uses text tags, whose caption names text, or
/// that carry an external `contains_text` flag.
pub fn filter_text_content(record: &CorpusRecord, keywords: &KeywordFilter) -> FilterDecision {
    if let Some(tag) = record.svg_source.as_deref().and_then(check_banned_tags) {
        return FilterDecision::Drop(DropReason::Tag { tag: tag.to_string() });
    }
    let words = keywords.matches(&record.caption);
    if !words.is_empty() {
        return FilterDecision::Drop(DropReason::Keyword { words });
    }
    if record.contains_text == Some(true) {
        return FilterDecision::Drop(DropReason::Flagged);
    }
    FilterDecision::Keep
}

#[derive(Debug, Error, PartialEq)]
pub enum MixError {
    #[error("weights must be non-negative and sum to 1, got {0:?}")]
    BadWeights(Vec<f64>),
    #[error("source {source_index} has {available} records but its quota is {quota}")]
    Exhausted { source_index: usize, quota: usize, available: usize },
}

/// Per-source counts `round(w·target)` with largest-remainder correction so
/// they sum to `target`. Ties go to the earlier source.
pub fn mix_quotas(weights: &[f64], target: usize) -> Result<Vec<usize>, MixError> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() || weights.iter().any(|w| !w.is_finite() || *w < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(MixError::BadWeights(weights.to_vec()));
    }
    let exact: Vec<f64> = weights.iter().map(|w| w / sum * target as f64).collect();
    let mut quotas: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let short = target - quotas.iter().sum::<usize>().min(target);
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    for &i in order.iter().take(short) {
        quotas[i] += 1;
    }
    Ok(quotas)
}

/// Samples each source's quota without replacement. Selected records keep
/// their original order; sources are concatenated in input order.
pub fn mix<T: Clone>(sources: &[(&[T], f64)], target: usize, seed: u64) -> Result<Vec<T>, MixError> {
    let weights: Vec<f64> = sources.iter().map(|(_, w)| *w).collect();
    let quotas = mix_quotas(&weights, target)?;
    let mut out = Vec::with_capacity(target);
    for (si, ((records, _), &quota)) in sources.iter().zip(&quotas).enumerate() {
        if quota > records.len() {
            return Err(MixError::Exhausted { source_index: si, quota, available: records.len() });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(si as u64);
        let mut picked = rand::seq::index::sample(&mut rng, records.len(), quota).into_vec();
        picked.sort_unstable();
        out.extend(picked.into_iter().map(|i| records[i].clone()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keyword_examples() {
        let f = KeywordFilter::default();
        let r = CorpusRecord::new("a", "a logo with the company name", SourceTag::CocoLike);
        assert_eq!(
            filter_text_content(&r, &f),
            FilterDecision::Drop(DropReason::Keyword { words: vec!["logo".into(), "name".into()] })
        );
        let r = CorpusRecord::new("b", "a red circle on blue background", SourceTag::CocoLike);
        assert!(filter_text_content(&r, &f).keep());
        assert!(f.matches("the context of it").is_empty());
        assert_eq!(f.matches("a Text-based poster"), vec!["text"]);
    }

    #[test]
    fn tag_drop() {
        let mut r = CorpusRecord::new("c", "a wave", SourceTag::SvgCollection);
        r.svg_source = Some(r##"<svg><path id="p" d="M0 0"/><textPath href="#p">x</textPath></svg>"##.into());
        assert!(matches!(filter_text_content(&r, &KeywordFilter::default()), FilterDecision::Drop(DropReason::Tag { .. })));
    }

    #[test]
    fn quotas() {
        assert_eq!(mix_quotas(&[0.5, 0.5], 10).unwrap(), vec![5, 5]);
        assert_eq!(mix_quotas(&[1.0, 0.0], 7).unwrap(), vec![7, 0]);
        assert_eq!(mix_quotas(&[0.5, 0.5], 95_026).unwrap(), vec![47_513, 47_513]);
        assert_eq!(mix_quotas(&[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 10).unwrap(), vec![4, 3, 3]);
        assert!(mix_quotas(&[0.7, 0.7], 10).is_err());
    }

    #[test]
    fn exhausted_source() {
        let a = [1, 2, 3];
        let b = [4, 5, 6, 7, 8, 9];
        assert_eq!(
            mix(&[(&a[..], 0.5), (&b[..], 0.5)], 8, 1),
            Err(MixError::Exhausted { source_index: 0, quota: 4, available: 3 })
        );
    }

    #[test]
    fn unknown_fields_survive() {
        let line = r#"{"id":"x","caption":"a cat","source_tag":"coco-like","license":"cc","score":3}"#;
        let r: CorpusRecord = serde_json::from_str(line).unwrap();
        assert_eq!(r.extra["license"], "cc");
        let back: serde_json::Value = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        let orig: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(back, orig);
    }
}
