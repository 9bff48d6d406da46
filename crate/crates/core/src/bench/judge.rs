//! Judge rubric prompts, reply parsing, and the parallel judging pipeline.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bench::{BenchPrompt, Category};
use crate::embed::{ServiceClient, ServiceError};
use crate::program::validate_and_render;
use crate::raster::{RasterImage, RenderConfig};

/// Scores the rubrics allow.
pub const RUBRIC_SCORES: [f64; 4] = [0.0, 30.0, 50.0, 100.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "item")]
pub enum JudgeAspect {
    Binding,
    Relation,
    NumTotal,
    NumItem,
    /// Count-per-instance for the item at this index of the numeracy spec.
    NumCpi(usize),
}

impl JudgeAspect {
    /// Aspects a prompt of this category is judged on.
    pub fn for_prompt(prompt: &BenchPrompt) -> Vec<JudgeAspect> {
        match prompt.category {
            c if c.is_binding() => vec![JudgeAspect::Binding],
            c if c.is_relation() => vec![JudgeAspect::Relation],
            _ => {
                let n = prompt.numeracy_spec.as_ref().map_or(0, Vec::len);
                let mut v = vec![JudgeAspect::NumTotal, JudgeAspect::NumItem];
                v.extend((0..n).map(JudgeAspect::NumCpi));
                v
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum JudgeError {
    #[error("aspect {aspect:?} does not apply to a {category:?} prompt")]
    Incompatible { category: Category, aspect: JudgeAspect },
    #[error("numeracy prompt {0} has no object counts")]
    MissingSpec(String),
    #[error("judge score {0} outside [0, 100]")]
    ScoreRange(f64),
    #[error(transparent)]
    Service(#[from] ServiceError),
}

const RESPONSE_FORMAT: &str = "Response format:\nREASONING: [your reasoning]\nSCORE: [score]\n";
const BRIEF_RESPONSE_FORMAT: &str = "Response format:\nREASONING: [your really brief reasoning]\nSCORE: [score]\n";

fn criteria(lines: [&str; 4]) -> String {
    let mut s = String::from("Scoring criteria:\n");
    for (score, line) in [100, 50, 30, 0].iter().zip(lines) {
        s.push_str(&format!("- {score}: {line}\n"));
    }
    s
}

/// Renders the rubric for `aspect` with placeholders substituted.
pub fn judge_prompt_for(prompt: &BenchPrompt, aspect: JudgeAspect) -> Result<String, JudgeError> {
    let incompatible = || JudgeError::Incompatible { category: prompt.category, aspect };
    let spec = || prompt.numeracy_spec.as_ref().ok_or_else(|| JudgeError::MissingSpec(prompt.id.clone()));
    let (head, body, format) = match aspect {
        JudgeAspect::Binding => {
            if !prompt.category.is_binding() {
                return Err(incompatible());
            }
            (
                format!("Evaluate whether the image matches the following prompt: {}", prompt.text),
                criteria([
                    "All items are recognizable and the binding between items and their attributes is correct.",
                    "All items are recognizable, but the binding between items and their attributes is incorrect or unclear.",
                    "Items are not recognizable, but the attribute binding appears correct.",
                    "Items are not recognizable and the binding between items and their attributes is incorrect.",
                ]),
                RESPONSE_FORMAT,
            )
        }
        JudgeAspect::Relation => {
            if !prompt.category.is_relation() {
                return Err(incompatible());
            }
            (
                format!("Evaluate whether the image matches the following prompt: {}", prompt.text),
                criteria([
                    "The items are clear and the relation between items is correct.",
                    "The items are not clear, but the relation between items is correct.",
                    "The items are clear, but the relation between items is incorrect.",
                    "The items are not clear and the relation between items is incorrect.",
                ]),
                RESPONSE_FORMAT,
            )
        }
        JudgeAspect::NumTotal => {
            if prompt.category != Category::Numeracy {
                return Err(incompatible());
            }
            let total: u32 = spec()?.iter().map(|(_, c)| c).sum();
            (
                format!(
                    "Evaluate whether the image contains exactly {total} distinct items in total (they do not need to be recognizable, but should be clearly individual objects)."
                ),
                criteria([
                    "All items in the image are clearly individual objects, and the total count is correct.",
                    "All items are clearly individual objects, but the total count is incorrect.",
                    "Some items are clearly individual objects, and the total count is incorrect.",
                    "The items are not clearly individual objects and the total count is incorrect.",
                ]),
                BRIEF_RESPONSE_FORMAT,
            )
        }
        JudgeAspect::NumItem => {
            if prompt.category != Category::Numeracy {
                return Err(incompatible());
            }
            let items: Vec<&str> = spec()?.iter().map(|(o, _)| o.as_str()).collect();
            (
                format!("Check whether the image contains the following items: {}.", items.join(", ")),
                criteria([
                    "The image contains all the items listed above.",
                    "The image contains most of the items listed above.",
                    "The image contains some of the items listed above.",
                    "The image does not contain any of the items listed above.",
                ]),
                BRIEF_RESPONSE_FORMAT,
            )
        }
        JudgeAspect::NumCpi(i) => {
            if prompt.category != Category::Numeracy {
                return Err(incompatible());
            }
            let (noun, count) = spec()?.get(i).ok_or_else(incompatible)?;
            let c = format!("{count} distinct {noun}");
            (
                format!("Evaluate whether the image contains exactly {c} in total."),
                criteria([
                    &format!("The image contains exactly {c}, and they are clearly individual objects."),
                    &format!("The image does not contain all the {c}, but the count is close to {count}."),
                    &format!("The image does not contain all the {c}, but the count is far from {count}."),
                    &format!("The image does not contain any of the {c}."),
                ]),
                BRIEF_RESPONSE_FORMAT,
            )
        }
    };
    Ok(format!("Prompt: {head}\n\n{body}\n{format}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub reasoning: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedVerdict {
    pub verdict: JudgeVerdict,
    pub warning: Option<String>,
}

#[derive(Debug, Error, PartialEq)]
pub enum VerdictError {
    #[error("reply has no SCORE line")]
    MissingScore,
    #[error("cannot read a number from SCORE line {0:?}")]
    BadScore(String),
    #[error("score {0} outside [0, 100]")]
    OutOfRange(f64),
}

fn score_line(line: &str) -> Option<&str> {
    line.trim().trim_start_matches('*').strip_prefix("SCORE:")
}

/// Parses a free-text judge reply. The last `SCORE:` line wins.
pub fn parse_verdict(reply: &str) -> Result<ParsedVerdict, VerdictError> {
    let lines: Vec<&str> = reply.lines().collect();
    let score_idx: Vec<usize> = (0..lines.len()).filter(|&i| score_line(lines[i]).is_some()).collect();
    let &last = score_idx.last().ok_or(VerdictError::MissingScore)?;
    let raw = score_line(lines[last]).unwrap_or_default();
    let cleaned = raw.trim_matches(|c: char| c == '*' || c == '[' || c == ']' || c.is_whitespace());
    let number: String = cleaned.chars().take_while(|c| c.is_ascii_digit() || *c == '.' || *c == '-').collect();
    let score: f64 = number.parse().map_err(|_| VerdictError::BadScore(raw.trim().to_string()))?;
    if !(0.0..=100.0).contains(&score) {
        return Err(VerdictError::OutOfRange(score));
    }

    let reasoning = match (0..last).find(|&i| lines[i].trim_start().starts_with("REASONING:")) {
        Some(r) => {
            let first = lines[r].trim_start().trim_start_matches("REASONING:");
            std::iter::once(first).chain(lines[r + 1..last].iter().copied()).collect::<Vec<_>>().join("\n")
        }
        None => String::new(),
    };
    let warning = (score_idx.len() > 1).then(|| format!("{} SCORE lines; using the last", score_idx.len()));
    Ok(ParsedVerdict { verdict: JudgeVerdict { reasoning: reasoning.trim().to_string(), score }, warning })
}

/// Anything that can score a rendered image against a rubric prompt.
pub trait Judge: Sync {
    fn judge(&self, prompt: &str, image: &RasterImage) -> Result<JudgeVerdict, JudgeError>;
}

impl Judge for ServiceClient {
    fn judge(&self, prompt: &str, image: &RasterImage) -> Result<JudgeVerdict, JudgeError> {
        let reply = ServiceClient::judge(self, prompt, image)?;
        if !(0.0..=100.0).contains(&reply.score) {
            return Err(JudgeError::ScoreRange(reply.score));
        }
        Ok(JudgeVerdict { reasoning: reply.reasoning, score: reply.score })
    }
}

/// A model response to one benchmark prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchSample {
    pub prompt_id: String,
    pub response: String,
}

/// One judged aspect of one sample. `score` is `None` when unjudged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub prompt_id: String,
    pub category: Category,
    pub aspect: JudgeAspect,
    pub score: Option<f64>,
    #[serde(default)]
    pub reasoning: String,
    /// The response failed the format gate and was scored 0 without judging.
    #[serde(default)]
    pub gated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Judges every aspect of every sample with at most `jobs` requests in
/// flight. Output order follows `samples`, then aspect order.
pub fn judge_samples(
    prompts: &[BenchPrompt],
    samples: &[BenchSample],
    judge: &dyn Judge,
    cfg: &RenderConfig,
    jobs: usize,
) -> Vec<VerdictRecord> {
    use rayon::prelude::*;
    use std::collections::HashMap;

    let by_id: HashMap<&str, &BenchPrompt> = prompts.iter().map(|p| (p.id.as_str(), p)).collect();
    let run = || {
        samples
            .par_iter()
            .flat_map_iter(|s| judge_one(by_id.get(s.prompt_id.as_str()).copied(), s, judge, cfg))
            .collect::<Vec<_>>()
    };
    match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    }
}

fn judge_one(prompt: Option<&BenchPrompt>, sample: &BenchSample, judge: &dyn Judge, cfg: &RenderConfig) -> Vec<VerdictRecord> {
    let Some(prompt) = prompt else {
        log::warn!("sample for unknown prompt {}", sample.prompt_id);
        return Vec::new();
    };
    let checked = validate_and_render(&sample.response, cfg);
    JudgeAspect::for_prompt(prompt)
        .into_iter()
        .map(|aspect| {
            let mut rec = VerdictRecord {
                prompt_id: prompt.id.clone(),
                category: prompt.category,
                aspect,
                score: None,
                reasoning: String::new(),
                gated: false,
                error: None,
            };
            let Some(img) = checked.image.as_ref().filter(|_| checked.report.passed()) else {
                rec.score = Some(0.0);
                rec.gated = true;
                return rec;
            };
            match judge_prompt_for(prompt, aspect).and_then(|text| judge.judge(&text, img)) {
                Ok(v) => {
                    rec.score = Some(v.score);
                    rec.reasoning = v.reasoning;
                }
                Err(e) => {
                    log::warn!("{} {:?}: {e}", prompt.id, aspect);
                    rec.error = Some(e.to_string());
                }
            }
            rec
        })
        .collect()
}
