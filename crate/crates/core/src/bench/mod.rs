//! Compositional benchmark: prompt generation, judge prompts, verdicts,
//! aggregation, and embedding-based metrics.

mod aggregate;
mod generate;
mod judge;
mod metrics;

use serde::{Deserialize, Serialize};

pub use aggregate::{
    aggregate, AggregateError, CategoryScores, Coverage, GroupWeights, NumeracyScores, TABLE_HEADER,
};
pub use generate::{
    generate_compbench, generate_compbench_with, number_word, plural, BenchConfig, COMMON_OBJECTS,
};
pub use judge::{
    judge_prompt_for, judge_samples, parse_verdict, BenchSample, Judge, JudgeAspect, JudgeError, JudgeVerdict,
    ParsedVerdict, VerdictError, VerdictRecord, RUBRIC_SCORES,
};
pub use metrics::{clip_style_score, diversity_score, MetricError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Color,
    Shape,
    Texture,
    Rel2d,
    Rel3d,
    Implicit,
    Numeracy,
}

impl Category {
    pub const ALL: [Category; 7] = [
        Category::Color,
        Category::Shape,
        Category::Texture,
        Category::Rel2d,
        Category::Rel3d,
        Category::Implicit,
        Category::Numeracy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Color => "color",
            Category::Shape => "shape",
            Category::Texture => "texture",
            Category::Rel2d => "rel2d",
            Category::Rel3d => "rel3d",
            Category::Implicit => "implicit",
            Category::Numeracy => "numeracy",
        }
    }

    pub fn is_binding(self) -> bool {
        matches!(self, Category::Color | Category::Shape | Category::Texture)
    }

    pub fn is_relation(self) -> bool {
        matches!(self, Category::Rel2d | Category::Rel3d | Category::Implicit)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchPrompt {
    pub id: String,
    pub category: Category,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numeracy_spec: Option<Vec<(String, u32)>>,
}

impl BenchPrompt {
    pub fn total_count(&self) -> Option<u32> {
        self.numeracy_spec.as_ref().map(|s| s.iter().map(|(_, c)| c).sum())
    }
}
