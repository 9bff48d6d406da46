//! The `<THINK>…</THINK><ANSWER>…</ANSWER>` response template.

use serde::{Deserialize, Serialize};

const THINK_OPEN: &str = "<THINK>";
const THINK_CLOSE: &str = "</THINK>";
const ANSWER_OPEN: &str = "<ANSWER>";
const ANSWER_CLOSE: &str = "</ANSWER>";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelResponse {
    pub raw_text: String,
    pub think: Option<String>,
    pub answer: Option<String>,
    pub structure_ok: bool,
}

/// Splits a raw response into its think and answer blocks.
///
/// Tags are case-sensitive and each must occur exactly once, in order.
/// Only whitespace may surround the template or sit between the blocks.
pub fn extract_response(raw_text: &str) -> ModelResponse {
    let parts = split_template(raw_text);
    ModelResponse {
        raw_text: raw_text.to_string(),
        structure_ok: parts.is_some(),
        think: parts.map(|(t, _)| t.trim().to_string()),
        answer: parts.map(|(_, a)| a.trim().to_string()),
    }
}

fn split_template(raw: &str) -> Option<(&str, &str)> {
    for tag in [THINK_OPEN, THINK_CLOSE, ANSWER_OPEN, ANSWER_CLOSE] {
        if raw.matches(tag).count() != 1 {
            return None;
        }
    }
    let body = raw.trim();
    let rest = body.strip_prefix(THINK_OPEN)?;
    let (think, rest) = rest.split_once(THINK_CLOSE)?;
    let rest = rest.trim_start().strip_prefix(ANSWER_OPEN)?;
    let answer = rest.strip_suffix(ANSWER_CLOSE)?;
    Some((think, answer))
}
