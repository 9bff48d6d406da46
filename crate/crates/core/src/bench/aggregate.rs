//! Per-category means, group averages, and the report table.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bench::{BenchPrompt, Category, JudgeAspect, VerdictRecord};

#[derive(Debug, Error, PartialEq)]
pub enum AggregateError {
    #[error("no judged prompts in category {0}")]
    EmptyCategory(&'static str),
    #[error("verdict for unknown prompt {0}")]
    UnknownPrompt(String),
    #[error("group weights must be finite, non-negative and not all zero")]
    BadWeights,
}

/// Weights of the binding, relation and numeracy averages in the grand average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupWeights {
    pub binding: f64,
    pub relation: f64,
    pub numeracy: f64,
}

impl Default for GroupWeights {
    /// Proportional to prompt counts (1200 / 1200 / 800).
    fn default() -> Self {
        Self { binding: 1200.0, relation: 1200.0, numeracy: 800.0 }
    }
}

impl GroupWeights {
    pub fn equal() -> Self {
        Self { binding: 1.0, relation: 1.0, numeracy: 1.0 }
    }

    pub fn combine(&self, bind: f64, rel: f64, num: f64) -> Result<f64, AggregateError> {
        let w = [self.binding, self.relation, self.numeracy];
        let total: f64 = w.iter().sum();
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) || total <= 0.0 {
            return Err(AggregateError::BadWeights);
        }
        Ok((w[0] * bind + w[1] * rel + w[2] * num) / total)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumeracyScores {
    pub total: f64,
    pub item: f64,
    pub cpi: f64,
    pub overall: f64,
}

impl NumeracyScores {
    pub fn new(total: f64, item: f64, cpi: f64) -> Self {
        Self { total, item, cpi, overall: 0.2 * total + 0.2 * item + 0.6 * cpi }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub judged: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryScores {
    pub color: f64,
    pub shape: f64,
    pub texture: f64,
    pub bind_avg: f64,
    pub rel2d: f64,
    pub rel3d: f64,
    pub implicit: f64,
    pub rel_avg: f64,
    pub numeracy: NumeracyScores,
    pub grand_avg: f64,
    pub coverage: BTreeMap<Category, Coverage>,
}

pub const TABLE_HEADER: [&str; 13] = [
    "Color", "Shape", "Texture", "Avg", "2D", "3D", "Implicit", "Avg", "Total", "Item", "CPI", "Overall", "Avg",
];

impl CategoryScores {
    /// Builds scores from sub-category means already on the 0..100 scale.
    pub fn from_means(
        binding: [f64; 3],
        relation: [f64; 3],
        numeracy: NumeracyScores,
        weights: &GroupWeights,
    ) -> Result<Self, AggregateError> {
        let bind_avg = binding.iter().sum::<f64>() / 3.0;
        let rel_avg = relation.iter().sum::<f64>() / 3.0;
        Ok(Self {
            color: binding[0],
            shape: binding[1],
            texture: binding[2],
            bind_avg,
            rel2d: relation[0],
            rel3d: relation[1],
            implicit: relation[2],
            rel_avg,
            grand_avg: weights.combine(bind_avg, rel_avg, numeracy.overall)?,
            numeracy,
            coverage: BTreeMap::new(),
        })
    }

    pub fn row(&self) -> [f64; 13] {
        let n = &self.numeracy;
        [
            self.color, self.shape, self.texture, self.bind_avg, self.rel2d, self.rel3d, self.implicit,
            self.rel_avg, n.total, n.item, n.cpi, n.overall, self.grand_avg,
        ]
    }

    pub fn to_tsv(&self, model: &str) -> String {
        let mut s = format!("Model\t{}\n{model}", TABLE_HEADER.join("\t"));
        for v in self.row() {
            s.push_str(&format!("\t{v:.1}"));
        }
        s.push('\n');
        s
    }

    pub fn to_text(&self, model: &str) -> String {
        let width = model.len().max(5);
        let groups = ["Attribute Binding", "Relation", "Numeracy", ""];
        let mut s = format!(
            "{:width$} | {:^31} | {:^31} | {:^31} | {}\n",
            "", groups[0], groups[1], groups[2], groups[3]
        );
        let h = &TABLE_HEADER;
        s.push_str(&format!("{:width$} |", "Model"));
        for (i, col) in h.iter().enumerate() {
            s.push_str(&format!(" {col:>7}"));
            if i % 4 == 3 && i < 12 {
                s.push_str(" |");
            }
        }
        s.push('\n');
        s.push_str(&format!("{model:width$} |"));
        for (i, v) in self.row().iter().enumerate() {
            s.push_str(&format!(" {v:>7.1}"));
            if i % 4 == 3 && i < 12 {
                s.push_str(" |");
            }
        }
        s.push('\n');
        let cov: Vec<String> =
            self.coverage.iter().map(|(c, v)| format!("{}={}/{}", c.name(), v.judged, v.total)).collect();
        if !cov.is_empty() {
            s.push_str(&format!("coverage: {}\n", cov.join(" ")));
        }
        s
    }
}

#[derive(Default)]
struct Mean {
    sum: f64,
    n: usize,
}

impl Mean {
    fn push(&mut self, v: f64) {
        self.sum += v;
        self.n += 1;
    }

    fn get(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }
}

/// Per-prompt scores collected from verdict records.
#[derive(Default)]
struct PromptScores {
    main: Option<f64>,
    total: Option<f64>,
    item: Option<f64>,
    cpi: BTreeMap<usize, f64>,
}

/// Means over judged prompts; unjudged prompts only count toward coverage.
/// A numeracy prompt's CPI is the mean of its judged per-item scores.
pub fn aggregate(
    prompts: &[BenchPrompt],
    verdicts: &[VerdictRecord],
    weights: &GroupWeights,
) -> Result<CategoryScores, AggregateError> {
    let mut per: BTreeMap<&str, PromptScores> = BTreeMap::new();
    let known: BTreeMap<&str, &BenchPrompt> = prompts.iter().map(|p| (p.id.as_str(), p)).collect();
    for v in verdicts {
        if !known.contains_key(v.prompt_id.as_str()) {
            return Err(AggregateError::UnknownPrompt(v.prompt_id.clone()));
        }
        let Some(score) = v.score else { continue };
        let e = per.entry(v.prompt_id.as_str()).or_default();
        match v.aspect {
            JudgeAspect::Binding | JudgeAspect::Relation => e.main = Some(score),
            JudgeAspect::NumTotal => e.total = Some(score),
            JudgeAspect::NumItem => e.item = Some(score),
            JudgeAspect::NumCpi(i) => {
                e.cpi.insert(i, score);
            }
        }
    }

    // Sorted iteration keeps sums independent of verdict order.
    let mut main: BTreeMap<Category, Mean> = BTreeMap::new();
    let (mut total, mut item, mut cpi) = (Mean::default(), Mean::default(), Mean::default());
    let mut coverage: BTreeMap<Category, Coverage> = BTreeMap::new();
    for (id, p) in &known {
        let cov = coverage.entry(p.category).or_insert(Coverage { judged: 0, total: 0 });
        cov.total += 1;
        let Some(s) = per.get(id) else { continue };
        let mut judged = false;
        if p.category == Category::Numeracy {
            if let Some(t) = s.total {
                total.push(t);
                judged = true;
            }
            if let Some(i) = s.item {
                item.push(i);
                judged = true;
            }
            if !s.cpi.is_empty() {
                cpi.push(s.cpi.values().sum::<f64>() / s.cpi.len() as f64);
                judged = true;
            }
        } else if let Some(m) = s.main {
            main.entry(p.category).or_default().push(m);
            judged = true;
        }
        if judged {
            cov.judged += 1;
        }
    }

    let mean_of = |c: Category| main.get(&c).and_then(Mean::get).ok_or(AggregateError::EmptyCategory(c.name()));
    let numeracy = NumeracyScores::new(
        total.get().ok_or(AggregateError::EmptyCategory("numeracy total"))?,
        item.get().ok_or(AggregateError::EmptyCategory("numeracy item"))?,
        cpi.get().ok_or(AggregateError::EmptyCategory("numeracy cpi"))?,
    );
    let mut scores = CategoryScores::from_means(
        [mean_of(Category::Color)?, mean_of(Category::Shape)?, mean_of(Category::Texture)?],
        [mean_of(Category::Rel2d)?, mean_of(Category::Rel3d)?, mean_of(Category::Implicit)?],
        numeracy,
        weights,
    )?;
    scores.coverage = coverage;
    Ok(scores)
}
