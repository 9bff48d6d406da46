use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::program::{parse_svg, ElementKind, ParseError};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeStats {
    pub element_count: usize,
    pub code_length: usize,
    pub comment_count: usize,
    pub optional_comment_count: usize,
    /// Leaf primitives by tag name. Groups are not counted.
    pub element_histogram: BTreeMap<String, usize>,
}

impl CodeStats {
    pub fn comments_per_element(&self) -> Option<f64> {
        (self.element_count > 0).then(|| self.comment_count as f64 / self.element_count as f64)
    }

    pub fn optional_ratio(&self) -> Option<f64> {
        (self.comment_count > 0).then(|| self.optional_comment_count as f64 / self.comment_count as f64)
    }
}

/// Counts leaf primitives, characters and comments of one SVG document.
/// Blank input yields all zeros.
pub fn code_stats(doc_source: &str) -> Result<CodeStats, ParseError> {
    if doc_source.trim().is_empty() {
        return Ok(CodeStats::default());
    }
    let doc = parse_svg(doc_source)?;
    let prims = doc.primitives();
    let mut element_histogram = BTreeMap::new();
    for p in &prims {
        debug_assert_ne!(p.kind(), ElementKind::Group);
        *element_histogram.entry(p.kind().tag().to_string()).or_insert(0) += 1;
    }
    Ok(CodeStats {
        element_count: prims.len(),
        code_length: doc_source.chars().count(),
        comment_count: doc.comments.len(),
        optional_comment_count: doc
            .comments
            .iter()
            .filter(|c| c.text.to_lowercase().contains("(optional)"))
            .count(),
        element_histogram,
    })
}

/// Means over a batch of documents, one row of a training-dynamics plot.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub documents: usize,
    pub mean_elements: f64,
    pub mean_code_length: f64,
    pub comments_per_element: f64,
    pub optional_ratio: f64,
    /// Share of all leaf primitives by tag name.
    pub element_share: BTreeMap<String, f64>,
}

impl StatsSummary {
    pub fn from_stats(stats: &[CodeStats]) -> Self {
        if stats.is_empty() {
            return Self::default();
        }
        let n = stats.len() as f64;
        let elements: usize = stats.iter().map(|s| s.element_count).sum();
        let comments: usize = stats.iter().map(|s| s.comment_count).sum();
        let optional: usize = stats.iter().map(|s| s.optional_comment_count).sum();
        let mut hist: BTreeMap<String, usize> = BTreeMap::new();
        for s in stats {
            for (k, v) in &s.element_histogram {
                *hist.entry(k.clone()).or_insert(0) += v;
            }
        }
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        Self {
            documents: stats.len(),
            mean_elements: elements as f64 / n,
            mean_code_length: stats.iter().map(|s| s.code_length).sum::<usize>() as f64 / n,
            comments_per_element: ratio(comments, elements),
            optional_ratio: ratio(optional, comments),
            element_share: hist.into_iter().map(|(k, v)| (k, ratio(v, elements))).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_ratios() {
        let src = r#"<svg viewBox="0 0 10 10"><!-- body --><rect width="1" height="1"/><rect width="2" height="2"/><!-- Shadow (Optional) --><circle r="1"/><!-- end --></svg>"#;
        let s = code_stats(src).unwrap();
        assert_eq!(s.element_count, 3);
        assert_eq!(s.comment_count, 3);
        assert_eq!(s.optional_comment_count, 1);
        assert_eq!(s.comments_per_element(), Some(1.0));
        assert_eq!(s.optional_ratio(), Some(1.0 / 3.0));
        assert_eq!(s.element_histogram["rect"], 2);
        assert_eq!(s.code_length, src.len());
    }

    #[test]
    fn empty_is_zero() {
        assert_eq!(code_stats("").unwrap(), CodeStats::default());
    }

    #[test]
    fn nested_groups_count_leaves() {
        let src = r#"<svg viewBox="0 0 10 10"><g><g><rect width="1" height="1"/><path d="M0 0L1 1"/></g><line x2="1"/></g></svg>"#;
        let s = code_stats(src).unwrap();
        assert_eq!(s.element_count, 3);
        assert!(!s.element_histogram.contains_key("g"));
        assert_eq!(s.element_histogram.values().sum::<usize>(), 3);
    }
}
