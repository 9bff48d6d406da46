use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{Map, Value};

use sgp_core::analysis::{bon_curve, bon_gap_fit, code_stats, line_chart_svg, BonCurve, CodeStats, Series, StatsSummary};
use sgp_core::bench::{
    aggregate, generate_compbench_with, judge_samples, BenchConfig, BenchPrompt, BenchSample, GroupWeights, VerdictRecord,
};
use sgp_core::corpus::{filter_text_content, mix, CorpusRecord, FilterDecision, KeywordFilter};
use sgp_core::grpo::{self, ClipConfig, ToyGrammar, TrainConfig};
use sgp_core::io::{read_jsonl, write_atomic, write_jsonl};
use sgp_core::program::{self, extract_response, parse_svg, Color};
use sgp_core::raster::{render as render_doc, RasterImage, RenderConfig};
use sgp_core::reward::{score_batch, Embedders, RewardWeights, ScoreInput};

use crate::embedders::{connect, service_url, EmbedderSet};
use crate::{service_err, ClientArgs, EmbedArgs, GrandWeights, TrainArgs, WeightArgs};

#[derive(Deserialize)]
struct ResponseRecord {
    #[serde(default)]
    id: Option<Value>,
    response: String,
    #[serde(default)]
    caption: String,
    #[serde(default)]
    ref_image_path: Option<PathBuf>,
}

/// Merges the input id, when present, into the output object.
fn with_id(id: &Option<Value>, body: Value) -> Value {
    let mut m = Map::new();
    if let Some(id) = id {
        m.insert("id".into(), id.clone());
    }
    if let Value::Object(o) = body {
        m.extend(o);
    }
    Value::Object(m)
}

fn weights(w: &WeightArgs) -> Result<RewardWeights> {
    if !(w.lambda_text >= 0.0 && w.lambda_image >= 0.0) || !w.lambda_text.is_finite() || !w.lambda_image.is_finite() {
        bail!("reward weights must be finite and non-negative");
    }
    Ok(RewardWeights { lambda_text: w.lambda_text, lambda_image: w.lambda_image })
}

pub fn validate(input: &Path, out: &Path, size: u32) -> Result<()> {
    let cfg = RenderConfig::with_size(size, size);
    cfg.check()?;
    let records: Vec<ResponseRecord> = read_jsonl(input)?;
    let reports: Vec<Value> = records
        .par_iter()
        .map(|r| with_id(&r.id, serde_json::to_value(program::validate(&r.response, &cfg)).expect("report serializes")))
        .collect();
    write_jsonl(out, &reports)?;
    let passed = reports.iter().filter(|r| r["fmt_reward"] == 1).count();
    println!("{passed}/{} responses passed the format gate", reports.len());
    Ok(())
}

pub fn render(input: &Path, out: &Path, width: u32, height: u32) -> Result<()> {
    let text = std::fs::read_to_string(input).with_context(|| input.display().to_string())?;
    let source = if text.contains("<ANSWER>") {
        extract_response(&text).answer.ok_or_else(|| anyhow!("response template is malformed"))?
    } else {
        text
    };
    let doc = parse_svg(&source)?;
    let img = render_doc(&doc, &RenderConfig::with_size(width, height))?;
    write_atomic(out, &img.encode_png()?)?;
    Ok(())
}

pub fn score(input: &Path, out: &Path, embed: &EmbedArgs, w: &WeightArgs, size: u32) -> Result<()> {
    let weights = weights(w)?;
    let cfg = RenderConfig::with_size(size, size);
    cfg.check()?;
    let records: Vec<ResponseRecord> = read_jsonl(input)?;
    let base = input.parent().unwrap_or(Path::new("."));
    let inputs = records
        .iter()
        .map(|r| {
            let reference = match &r.ref_image_path {
                Some(p) => {
                    let path = base.join(p);
                    let bytes = std::fs::read(&path).with_context(|| path.display().to_string())?;
                    Some(RasterImage::decode_png(&bytes).with_context(|| path.display().to_string())?)
                }
                None => None,
            };
            Ok(ScoreInput { response: r.response.clone(), caption: r.caption.clone(), reference })
        })
        .collect::<Result<Vec<_>>>()?;

    let set = EmbedderSet::from_args(embed)?;
    let embedders = Embedders { text: Some(set.text.as_ref()), image: Some(set.image.as_ref()) };
    let results = score_batch(&inputs, &weights, &embedders, &cfg);
    let mut failed = 0;
    let rows: Vec<Value> = records
        .iter()
        .zip(results)
        .map(|(r, res)| match res {
            Ok(b) => with_id(&r.id, serde_json::to_value(b).expect("breakdown serializes")),
            Err(e) => {
                failed += 1;
                with_id(&r.id, serde_json::json!({ "error": e.to_string() }))
            }
        })
        .collect();
    write_jsonl(out, &rows)?;
    if failed > 0 {
        let msg = format!("{failed} of {} samples could not be scored", rows.len());
        return Err(if set.remote { service_err(msg) } else { anyhow!(msg) });
    }
    Ok(())
}

pub fn train_toy(args: &TrainArgs) -> Result<()> {
    let cfg = TrainConfig {
        iters: args.iters,
        group_size: args.group_size,
        learning_rate: args.lr,
        epochs: args.epochs,
        max_len: args.max_len,
        render_size: args.render_size,
        clip: ClipConfig { clip_low: args.clip_low, clip_high: args.clip_high },
        weights: weights(&args.weights)?,
        seed: args.seed,
    };
    let set = EmbedderSet::from_args(&args.embed)?;
    let grammar = ToyGrammar::default();
    let outcome = grpo::train_toy(&grammar, &grammar.captions(), &cfg, set.text.as_ref())?;
    write_jsonl(&args.trace, &outcome.trace)?;
    if let Some(p) = &args.snapshot {
        write_atomic(p, &outcome.policy.to_bytes())?;
    }
    if let (Some(first), Some(last)) = (outcome.trace.first(), outcome.trace.last()) {
        println!(
            "reward {:.4} -> {:.4}, format rate {:.3} -> {:.3}, entropy {:.3}",
            first.mean_reward, last.mean_reward, first.fmt_rate, last.fmt_rate, last.entropy
        );
    }
    Ok(())
}

pub fn bench_gen(seed: u64, out: &Path, per_subcategory: usize, numeracy_per_count: usize) -> Result<()> {
    let cfg = BenchConfig { per_subcategory, numeracy_per_count, ..BenchConfig::default() };
    let prompts = generate_compbench_with(seed, &cfg);
    write_jsonl(out, &prompts)?;
    println!("{} prompts", prompts.len());
    Ok(())
}

pub fn bench_judge(
    prompts: &Path,
    samples: &Path,
    out: &Path,
    url: Option<String>,
    size: u32,
    client: &ClientArgs,
    jobs: usize,
) -> Result<()> {
    let prompts: Vec<BenchPrompt> = read_jsonl(prompts)?;
    let samples: Vec<BenchSample> = read_jsonl(samples)?;
    let url = service_url(url.as_deref()).ok_or_else(|| anyhow!("--service-url or SGP_SERVICE_URL is required"))?;
    let cfg = RenderConfig::with_size(size, size);
    cfg.check()?;
    let judge = connect(&url, client)?;
    let records = judge_samples(&prompts, &samples, &judge, &cfg, jobs);
    write_jsonl(out, &records)?;
    let errors = records.iter().filter(|r| r.error.is_some()).count();
    let gated = records.iter().filter(|r| r.gated).count();
    println!("{} verdicts, {gated} gated to 0, {errors} unjudged", records.len());
    if errors > 0 && errors == records.len() - gated {
        return Err(service_err("every judge request failed"));
    }
    Ok(())
}

pub fn bench_report(prompts: &Path, verdicts: &Path, out: Option<&Path>, model: &str, w: GrandWeights) -> Result<()> {
    let prompts: Vec<BenchPrompt> = read_jsonl(prompts)?;
    let verdicts: Vec<VerdictRecord> = read_jsonl(verdicts)?;
    let weights = match w {
        GrandWeights::PromptCount => GroupWeights::default(),
        GrandWeights::Equal => GroupWeights::equal(),
    };
    let scores = aggregate(&prompts, &verdicts, &weights)?;
    if let Some(p) = out {
        write_atomic(p, scores.to_tsv(model).as_bytes())?;
    }
    print!("{}", scores.to_text(model));
    Ok(())
}

#[derive(Deserialize)]
struct StatsRecord {
    #[serde(default)]
    step: Option<i64>,
    #[serde(default)]
    response: Option<String>,
    #[serde(default)]
    svg: Option<String>,
}

pub fn analyze_stats(input: &Path, out: &Path, plot: Option<&Path>) -> Result<()> {
    let records: Vec<StatsRecord> = read_jsonl(input)?;
    let per: Vec<(i64, Option<CodeStats>)> = records
        .par_iter()
        .map(|r| {
            let source = match (&r.svg, &r.response) {
                (Some(s), _) => Some(s.clone()),
                (None, Some(resp)) => extract_response(resp).answer,
                (None, None) => None,
            };
            (r.step.unwrap_or(0), source.and_then(|s| code_stats(&s).ok()))
        })
        .collect();
    let skipped = per.iter().filter(|(_, s)| s.is_none()).count();
    if skipped > 0 {
        log::warn!("{skipped} records without a parseable SVG were skipped");
    }
    let mut by_step: BTreeMap<i64, Vec<CodeStats>> = BTreeMap::new();
    for (step, s) in per {
        if let Some(s) = s {
            by_step.entry(step).or_default().push(s);
        }
    }
    let summaries: Vec<(i64, StatsSummary)> =
        by_step.into_iter().map(|(k, v)| (k, StatsSummary::from_stats(&v))).collect();
    let kinds: Vec<String> = {
        let mut k: Vec<String> = summaries.iter().flat_map(|(_, s)| s.element_share.keys().cloned()).collect();
        k.sort();
        k.dedup();
        k
    };
    let mut tsv = String::from("step\tdocuments\tmean_elements\tmean_code_length\tcomments_per_element\toptional_ratio");
    for k in &kinds {
        write!(tsv, "\tshare_{k}")?;
    }
    tsv.push('\n');
    for (step, s) in &summaries {
        write!(
            tsv,
            "{step}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
            s.documents, s.mean_elements, s.mean_code_length, s.comments_per_element, s.optional_ratio
        )?;
        for k in &kinds {
            write!(tsv, "\t{:.6}", s.element_share.get(k).copied().unwrap_or(0.0))?;
        }
        tsv.push('\n');
    }
    write_atomic(out, tsv.as_bytes())?;
    if let Some(p) = plot {
        let max_len = summaries.iter().map(|(_, s)| s.mean_code_length).fold(0.0, f64::max).max(1.0);
        let max_el = summaries.iter().map(|(_, s)| s.mean_elements).fold(0.0, f64::max).max(1.0);
        let series = vec![
            Series {
                points: summaries.iter().map(|(k, s)| (*k as f64, s.mean_elements / max_el)).collect(),
                color: Color::rgb(31, 119, 180),
            },
            Series {
                points: summaries.iter().map(|(k, s)| (*k as f64, s.mean_code_length / max_len)).collect(),
                color: Color::rgb(214, 39, 40),
            },
        ];
        write_atomic(p, line_chart_svg(&series, 480.0, 320.0).as_bytes())?;
    }
    Ok(())
}

#[derive(Deserialize)]
struct BonRecord {
    prompt_id: Value,
    score: f64,
    #[serde(default)]
    model: Option<String>,
}

const PALETTE: [Color; 6] = [
    Color::rgb(31, 119, 180),
    Color::rgb(214, 39, 40),
    Color::rgb(44, 160, 44),
    Color::rgb(148, 103, 189),
    Color::rgb(255, 127, 14),
    Color::rgb(23, 190, 207),
];

pub fn analyze_bon(
    input: &Path,
    out: &Path,
    k: usize,
    n_values: &[usize],
    baseline: Option<&str>,
    plot: Option<&Path>,
) -> Result<()> {
    if let Some(&n) = n_values.iter().find(|&&n| n == 0 || n > k) {
        bail!("every N must satisfy 1 <= N <= k = {k}, got {n}");
    }
    let records: Vec<BonRecord> = read_jsonl(input)?;
    let mut models: BTreeMap<String, BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    for r in records {
        let model = r.model.unwrap_or_else(|| "all".into());
        let prompt = match r.prompt_id {
            Value::String(s) => s,
            v => v.to_string(),
        };
        models.entry(model).or_default().entry(prompt).or_default().push(r.score);
    }
    let mut curves: BTreeMap<String, BonCurve> = BTreeMap::new();
    for (model, prompts) in &models {
        let mut per_prompt = Vec::with_capacity(prompts.len());
        for (pid, scores) in prompts {
            if scores.len() < k {
                bail!("model {model}, prompt {pid}: {} scores, k = {k}", scores.len());
            }
            per_prompt.push(scores[..k].to_vec());
        }
        curves.insert(model.clone(), bon_curve(&per_prompt, n_values)?);
    }
    let mut tsv = String::from("model\tn\tscore\n");
    for (model, c) in &curves {
        for (n, s) in c.n_values.iter().zip(&c.scores) {
            writeln!(tsv, "{model}\t{n}\t{s:.6}")?;
        }
    }
    write_atomic(out, tsv.as_bytes())?;

    for (model, c) in &curves {
        if let Some((a, b)) = c.fit {
            println!("{model}: score = {a:.6} * log10(N) + {b:.6}");
        }
    }
    if let Some(base) = baseline {
        let bc = curves.get(base).ok_or_else(|| anyhow!("baseline model {base:?} not in input"))?;
        for (model, c) in curves.iter().filter(|(m, _)| m.as_str() != base) {
            let g = bon_gap_fit(c, bc)?;
            let n_star = g.n_star.map_or("-".to_string(), |n| format!("{n:.4e}"));
            println!("{model} - {base}: slope {:.6}, intercept {:.6}, N* {n_star} ({:?})", g.slope, g.intercept, g.status);
        }
    }
    if let Some(p) = plot {
        let series: Vec<Series> = curves
            .values()
            .enumerate()
            .map(|(i, c)| Series {
                points: c.n_values.iter().zip(&c.scores).map(|(n, s)| ((*n as f64).log10(), *s)).collect(),
                color: PALETTE[i % PALETTE.len()],
            })
            .collect();
        write_atomic(p, line_chart_svg(&series, 480.0, 320.0).as_bytes())?;
    }
    Ok(())
}

pub fn corpus_filter(input: &Path, out: &Path, dropped: Option<&Path>, keywords: &str) -> Result<()> {
    let filter = if keywords == "default" {
        KeywordFilter::default()
    } else {
        let text = std::fs::read_to_string(keywords).with_context(|| keywords.to_string())?;
        let words: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        KeywordFilter::new(&words)?
    };
    let records: Vec<CorpusRecord> = read_jsonl(input)?;
    let decisions: Vec<FilterDecision> = records.par_iter().map(|r| filter_text_content(r, &filter)).collect();
    let mut kept = Vec::new();
    let mut drops = Vec::new();
    for (r, d) in records.into_iter().zip(decisions) {
        match d {
            FilterDecision::Keep => kept.push(r),
            FilterDecision::Drop(reason) => drops.push(serde_json::json!({ "id": r.id, "drop": reason })),
        }
    }
    write_jsonl(out, &kept)?;
    if let Some(p) = dropped {
        write_jsonl(p, &drops)?;
    }
    println!("kept {}, dropped {}", kept.len(), drops.len());
    Ok(())
}

pub fn corpus_mix(inputs: &[PathBuf], weights: &[f64], target: usize, seed: u64, out: &Path) -> Result<()> {
    if inputs.len() != weights.len() {
        bail!("{} inputs but {} weights", inputs.len(), weights.len());
    }
    let sources: Vec<Vec<CorpusRecord>> = inputs.iter().map(|p| read_jsonl(p)).collect::<Result<_, _>>()?;
    let pairs: Vec<(&[CorpusRecord], f64)> = sources.iter().map(Vec::as_slice).zip(weights.iter().copied()).collect();
    let mixed = mix(&pairs, target, seed)?;
    write_jsonl(out, &mixed)?;
    println!("{} records", mixed.len());
    Ok(())
}
