//! Property tests for the invariants each module promises.

mod common;

use std::sync::atomic::{AtomicUsize, Ordering};

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;

use sgp_core::analysis::{bon_estimate, code_stats};
use sgp_core::bench::{
    aggregate, diversity_score, generate_compbench, generate_compbench_with, BenchConfig, Category, GroupWeights,
    JudgeAspect, VerdictRecord, RUBRIC_SCORES,
};
use sgp_core::corpus::{filter_text_content, mix, CorpusRecord, KeywordFilter, SourceTag};
use sgp_core::embed::{
    cosine, reference_embed_image, reference_embed_text, EmbedError, Embedder, EmbeddingVector, ReferenceEmbedder,
};
use sgp_core::grpo::{normalize_advantages, surrogate_term, ClipConfig};
use sgp_core::program::{check_banned_tags, parse_svg, Color};
use sgp_core::raster::{over, render, RasterImage, RenderConfig};
use sgp_core::reward::{fuse, fused_reward, rescale_cosine, Embedders, RewardWeights};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn cfg(size: u32) -> RenderConfig {
    RenderConfig::with_size(size, size)
}

// ---- program ----

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn serialize_round_trips(seed in any::<u64>()) {
        let src = common::wrap(&common::random_elements(&mut rng(seed), 6));
        let doc = parse_svg(&src).unwrap();
        let again = parse_svg(&doc.to_svg_string()).unwrap();
        prop_assert!(doc.same_structure(&again), "{}", src);
    }

    #[test]
    fn primitives_follow_source_order(seed in any::<u64>()) {
        let src = common::wrap(&common::random_elements(&mut rng(seed), 8));
        let scanner = Regex::new(r"<(rect|circle|ellipse|line|polyline|polygon|path)[\s/>]").unwrap();
        let scanned: Vec<&str> = scanner.captures_iter(&src).map(|c| c.get(1).unwrap().as_str()).collect();
        let doc = parse_svg(&src).unwrap();
        let parsed: Vec<&str> = doc.primitives().iter().map(|p| p.kind().tag()).collect();
        prop_assert_eq!(parsed, scanned);
    }

    #[test]
    fn banned_tags_ignore_case(tag in prop::sample::select(vec!["text", "tspan", "textPath"]), flips in any::<u16>()) {
        let mixed: String = tag
            .chars()
            .enumerate()
            .map(|(i, c)| if flips >> (i % 16) & 1 == 1 { c.to_ascii_uppercase() } else { c.to_ascii_lowercase() })
            .collect();
        let src = format!(r#"<svg viewBox="0 0 10 10"><{mixed} x="1">hi</{mixed}></svg>"#);
        prop_assert!(check_banned_tags(&src).is_some());
    }

    #[test]
    fn attribute_text_is_not_a_tag(value in "[a-z ]{0,12}") {
        let src = format!(
            r#"<svg viewBox="0 0 10 10" class="text {value}"><rect id="text" data-x="a text label" width="1" height="1"/>text</svg>"#
        );
        prop_assert_eq!(check_banned_tags(&src), None);
    }
}

// ---- raster ----

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn outside_elements_do_not_change_pixels(seed in any::<u64>()) {
        let mut r = rng(seed);
        let els = common::random_elements(&mut r, 6);
        let mut with = els.clone();
        let at = r.gen_range(0..=with.len());
        with.insert(at, common::outside_element(&mut r));
        let a = render(&parse_svg(&common::wrap(&els)).unwrap(), &cfg(48)).unwrap();
        let b = render(&parse_svg(&common::wrap(&with)).unwrap(), &cfg(48)).unwrap();
        prop_assert_eq!(a.data(), b.data());
    }

    #[test]
    fn opaque_cover_paints_everything(seed in any::<u64>(), rgb in any::<[u8; 3]>()) {
        let mut els = common::random_elements(&mut rng(seed), 6);
        els.push(format!(
            r#"<rect x="0" y="0" width="100" height="100" fill="rgb({},{},{})"/>"#,
            rgb[0], rgb[1], rgb[2]
        ));
        let img = render(&parse_svg(&common::wrap(&els)).unwrap(), &cfg(40)).unwrap();
        prop_assert!(img.pixels().all(|p| p == rgb));
    }

    #[test]
    fn fill_opacity_matches_integer_oracle(k in 0u32..=256, c in any::<[u8; 3]>(), b in any::<[u8; 3]>()) {
        // a = k/256 keeps every product exact, so round-half-up in integers is the truth.
        let a = f64::from(k) / 256.0;
        let oracle = |c: u8, b: u8| ((k * u32::from(c) + (256 - k) * u32::from(b) + 128) / 256) as u8;
        for i in 0..3 {
            prop_assert_eq!(over(c[i], b[i], a), oracle(c[i], b[i]));
        }
        let src = format!(
            r#"<svg viewBox="0 0 4 4"><rect width="4" height="4" fill="rgb({},{},{})" fill-opacity="{a}"/></svg>"#,
            c[0], c[1], c[2]
        );
        let config = RenderConfig { background: Color::rgb(b[0], b[1], b[2]), ..cfg(4) };
        let img = render(&parse_svg(&src).unwrap(), &config).unwrap();
        let want = [oracle(c[0], b[0]), oracle(c[1], b[1]), oracle(c[2], b[2])];
        prop_assert!(img.pixels().all(|p| p == want));
    }
}

#[test]
fn letterboxing_keeps_circles_round() {
    let doc = parse_svg(r#"<svg viewBox="0 0 10 10"><circle cx="5" cy="5" r="4" fill="black"/></svg>"#).unwrap();
    for (w, h) in [(384, 384), (384, 256), (200, 384)] {
        let img = render(&doc, &RenderConfig::with_size(w, h)).unwrap();
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for y in 0..h {
            for x in 0..w {
                if img.pixel(x, y) == [0, 0, 0] {
                    xs.push(x);
                    ys.push(y);
                }
            }
        }
        let extent = |v: &[u32]| f64::from(v.iter().max().unwrap() - v.iter().min().unwrap() + 1);
        let ratio = extent(&xs) / extent(&ys);
        assert!((ratio - 1.0).abs() <= 0.02, "{w}x{h}: {ratio}");
    }
}

// ---- embed ----

fn nonzero_vec() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e3f64..1e3, 1..48).prop_filter("non-zero", |v| v.iter().any(|x| *x != 0.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn normalize_is_idempotent_and_unit(v in nonzero_vec()) {
        let once = EmbeddingVector::normalized(v).unwrap();
        let twice = once.normalize().unwrap();
        prop_assert!((once.norm() - 1.0).abs() <= 1e-6);
        for (a, b) in once.values().iter().zip(twice.values()) {
            prop_assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn cosine_is_symmetric_and_bounded((a, b) in (1usize..48).prop_flat_map(|d| {
        let s = prop::collection::vec(-1.0f64..1.0, d);
        (s.clone(), s)
    })) {
        let (Ok(a), Ok(b)) = (EmbeddingVector::normalized(a), EmbeddingVector::normalized(b)) else {
            return Ok(());
        };
        let ab = cosine(&a, &b).unwrap();
        prop_assert_eq!(ab, cosine(&b, &a).unwrap());
        prop_assert!((-1.0..=1.0).contains(&ab));
    }

    #[test]
    fn reference_embedders_are_pure(caption in "[a-z ]{0,40}", rgb in any::<[u8; 3]>()) {
        prop_assert_eq!(reference_embed_text(&caption), reference_embed_text(&caption.clone()));
        let img = RasterImage::filled(6, 5, Color::rgb(rgb[0], rgb[1], rgb[2]));
        prop_assert_eq!(reference_embed_image(&img), reference_embed_image(&img.clone()));
    }
}

#[test]
fn zero_vector_cannot_be_normalized() {
    assert!(matches!(EmbeddingVector::normalized(vec![0.0; 4]), Err(EmbedError::ZeroNorm)));
}

// ---- reward ----

/// Counts every embedding call it forwards.
#[derive(Default)]
struct Probe {
    calls: AtomicUsize,
}

impl Embedder for Probe {
    fn model_tag(&self) -> &str {
        "probe"
    }

    fn embed_texts(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        ReferenceEmbedder.embed_texts(texts)
    }

    fn embed_images(&self, images: &[&RasterImage]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        ReferenceEmbedder.embed_images(images)
    }
}

/// A valid response broken in one of several ways.
fn corrupt(svg: &str, how: usize) -> String {
    match how {
        0 => format!("<ANSWER>{svg}</ANSWER>"),
        1 => format!("<ANSWER>{svg}</ANSWER><THINK>late</THINK>"),
        2 => common::respond(&svg.replace("</svg>", "<text x=\"1\">hi</text></svg>")),
        3 => common::respond(&svg.replace("</svg>", "<TSPAN/></svg>")),
        4 => common::respond(&svg.replace("</svg>", "")),
        5 => common::respond(&svg.replace("</svg>", r#"<rect width="NaN" height="4"/></svg>"#)),
        6 => common::respond(&svg.replace("viewBox=\"0 0 100 100\"", "viewBox=\"0 0 0 100\"")),
        _ => format!("<THINK>x</THINK>{svg}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn failing_gate_scores_zero_without_embedding(seed in any::<u64>(), how in 0usize..8) {
        let svg = common::wrap(&common::random_elements(&mut rng(seed), 4));
        let probe = Probe::default();
        let reference = RasterImage::filled(8, 8, Color::WHITE);
        let w = RewardWeights { lambda_text: 1.0, lambda_image: 1.0 };
        let b = fused_reward(&corrupt(&svg, how), "a red circle", Some(&reference), &w, &Embedders::both(&probe), &cfg(24))
            .unwrap();
        prop_assert_eq!(b.fmt, 0);
        prop_assert_eq!(b.fused, 0.0);
        prop_assert_eq!(probe.calls.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn fused_stays_in_range(seed in any::<u64>(), caption in "[a-z ]{1,30}") {
        let mut r = rng(seed);
        let response = common::respond(&common::wrap(&common::random_elements(&mut r, 5)));
        let reference = render(&parse_svg(&common::wrap(&common::random_elements(&mut r, 3))).unwrap(), &cfg(24)).unwrap();
        let e = Embedders::both(&ReferenceEmbedder);
        let text_only = fused_reward(&response, &caption, Some(&reference), &RewardWeights::default(), &e, &cfg(24)).unwrap();
        prop_assert!((0.0..=1.0).contains(&text_only.fused));
        let both = RewardWeights { lambda_text: 1.0, lambda_image: 1.0 };
        let full = fused_reward(&response, &caption, Some(&reference), &both, &e, &cfg(24)).unwrap();
        prop_assert!((0.0..=2.0).contains(&full.fused));
    }

    #[test]
    fn fused_increases_with_each_cosine(
        c1 in -1.0f64..1.0,
        gap in 1e-9f64..1.0,
        other in -1.0f64..1.0,
        lt in 0.01f64..2.0,
        li in 0.01f64..2.0,
    ) {
        let c2 = (c1 + gap).min(1.0);
        prop_assume!(c2 > c1);
        let w = RewardWeights { lambda_text: lt, lambda_image: li };
        let ro = Some(rescale_cosine(other));
        prop_assert!(fuse(1, Some(rescale_cosine(c1)), ro, &w) < fuse(1, Some(rescale_cosine(c2)), ro, &w));
        prop_assert!(fuse(1, ro, Some(rescale_cosine(c1)), &w) < fuse(1, ro, Some(rescale_cosine(c2)), &w));
    }
}

// ---- grpo ----

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn advantages_are_standardized(rewards in prop::collection::vec(0.0f64..1.0, 2..=64)) {
        let g = rewards.len() as f64;
        let mean = rewards.iter().sum::<f64>() / g;
        let std = (rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / g).sqrt();
        let a = normalize_advantages(&rewards).unwrap();
        if std < 1e-6 {
            return Ok(());
        }
        let am = a.iter().sum::<f64>() / g;
        let asd = (a.iter().map(|x| (x - am).powi(2)).sum::<f64>() / g).sqrt();
        prop_assert!(am.abs() < 1e-9, "mean {am}");
        prop_assert!((asd - 1.0).abs() < 1e-7, "std {asd}");
    }

    #[test]
    fn advantages_ignore_exact_shifts(ks in prop::collection::vec(0u32..(1 << 20), 2..=64), m in -(1i64 << 20)..(1i64 << 20)) {
        // Dyadic rewards and shift: every r + c is exact.
        let unit = 2f64.powi(-20);
        let rewards: Vec<f64> = ks.iter().map(|&k| f64::from(k) * unit).collect();
        let c = m as f64 * unit;
        let shifted: Vec<f64> = rewards.iter().map(|r| r + c).collect();
        let a = normalize_advantages(&rewards).unwrap();
        let b = normalize_advantages(&shifted).unwrap();
        prop_assert_eq!(a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn equal_rewards_give_zero_advantages(r in -10.0f64..10.0, g in 2usize..=64) {
        prop_assert_eq!(normalize_advantages(&vec![r; g]).unwrap(), vec![0.0; g]);
    }

    #[test]
    fn surrogate_never_exceeds_unclipped(ratio in 0.0f64..3.0, adv in -5.0f64..5.0, lo in 0.01f64..0.5, hi in 0.01f64..0.5) {
        let clip = ClipConfig { clip_low: lo, clip_high: hi };
        let t = surrogate_term(ratio, adv, &clip);
        prop_assert!(t <= ratio * adv);
        if adv > 0.0 {
            prop_assert!(t <= clip.upper() * adv + 1e-15);
        }
        if adv < 0.0 {
            prop_assert!(t <= clip.lower() * adv + 1e-15);
        }
    }
}

// ---- bench ----

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn prompt_counts_hold_for_any_seed(seed in any::<u64>()) {
        let prompts = generate_compbench(seed);
        prop_assert_eq!(prompts.len(), 3200);
        for c in Category::ALL {
            let n = prompts.iter().filter(|p| p.category == c).count();
            prop_assert_eq!(n, if c == Category::Numeracy { 800 } else { 400 });
        }
        for total in 3..=10 {
            prop_assert_eq!(prompts.iter().filter(|p| p.total_count() == Some(total)).count(), 100);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn aggregate_ignores_verdict_order(seed in any::<u64>()) {
        let mut r = rng(seed);
        let small = BenchConfig { per_subcategory: 6, numeracy_per_count: 2, ..BenchConfig::default() };
        let prompts = generate_compbench_with(seed, &small);
        let mut verdicts = Vec::new();
        for p in &prompts {
            for aspect in JudgeAspect::for_prompt(p) {
                // Most aspects are judged; some are left unjudged.
                let score = r.gen_bool(0.9).then(|| RUBRIC_SCORES[r.gen_range(0..4)]);
                verdicts.push(VerdictRecord {
                    prompt_id: p.id.clone(),
                    category: p.category,
                    aspect,
                    score,
                    reasoning: String::new(),
                    gated: false,
                    error: None,
                });
            }
        }
        let Ok(a) = aggregate(&prompts, &verdicts, &GroupWeights::default()) else { return Ok(()) };
        verdicts.shuffle(&mut r);
        let b = aggregate(&prompts, &verdicts, &GroupWeights::default()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn diversity_is_bounded(seed in any::<u64>(), n in 2usize..6) {
        let mut r = rng(seed);
        let images: Vec<RasterImage> = (0..n)
            .map(|_| render(&parse_svg(&common::wrap(&common::random_elements(&mut r, 4))).unwrap(), &cfg(24)).unwrap())
            .collect();
        let refs: Vec<&RasterImage> = images.iter().collect();
        let d = diversity_score(&refs, &[&ReferenceEmbedder]).unwrap();
        prop_assert!((0.0..=2.0).contains(&d), "{d}");
        let same = vec![refs[0]; n];
        prop_assert_eq!(diversity_score(&same, &[&ReferenceEmbedder]).unwrap(), 0.0);
    }
}

// ---- analysis ----

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn bon_endpoints(scores in prop::collection::vec(0.0f64..1.0, 1..64)) {
        let k = scores.len();
        let max = scores.iter().cloned().fold(f64::MIN, f64::max);
        prop_assert_eq!(bon_estimate(&scores, k).unwrap(), max);
        let mean = scores.iter().sum::<f64>() / k as f64;
        prop_assert!((bon_estimate(&scores, 1).unwrap() - mean).abs() <= 1e-12);
    }

    #[test]
    fn bon_is_monotone_in_n(scores in prop::collection::vec(prop::sample::select(vec![0.0, 30.0, 50.0, 100.0]), 1..40)) {
        let mut prev = f64::MIN;
        for n in 1..=scores.len() {
            let v = bon_estimate(&scores, n).unwrap();
            prop_assert!(v >= prev - 1e-12, "n={n}: {v} < {prev}");
            prev = v;
        }
    }

    #[test]
    fn code_stats_ignore_attribute_order(seed in any::<u64>()) {
        let src = common::wrap(&common::random_elements(&mut rng(seed), 6));
        let reordered = reverse_attributes(&src);
        prop_assert_ne!(&src, &reordered);
        prop_assert_eq!(code_stats(&src).unwrap(), code_stats(&reordered).unwrap());
    }
}

/// Reverses the attribute list of every start tag.
fn reverse_attributes(src: &str) -> String {
    let tag = Regex::new(r#"<([a-zA-Z]+)((?:\s+[\w:-]+="[^"]*")*)(\s*/?)>"#).unwrap();
    let attr = Regex::new(r#"\s+[\w:-]+="[^"]*""#).unwrap();
    tag.replace_all(src, |c: &regex::Captures| {
        let mut attrs: Vec<&str> = attr.find_iter(&c[2]).map(|m| m.as_str()).collect();
        attrs.reverse();
        format!("<{}{}{}>", &c[1], attrs.concat(), &c[3])
    })
    .into_owned()
}

// ---- corpus ----

const WORDS: [&str; 16] = [
    "a", "red", "cat", "on", "context", "pretext", "text-based", "LOGO", "signal", "named", "sign", "river", "letters",
    "number", "numbers", "lettering",
];

fn records(seed: u64, n: usize) -> Vec<CorpusRecord> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| {
            let words: Vec<&str> = (0..r.gen_range(1..6)).map(|_| WORDS[r.gen_range(0..WORDS.len())]).collect();
            let mut rec = CorpusRecord::new(&format!("r{i}"), &words.join(" "), SourceTag::CocoLike);
            if r.gen_bool(0.2) {
                rec.svg_source = Some(r#"<svg viewBox="0 0 1 1"><text>x</text></svg>"#.to_string());
            }
            if r.gen_bool(0.1) {
                rec.contains_text = Some(true);
            }
            rec
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn filtering_is_idempotent(seed in any::<u64>()) {
        let f = KeywordFilter::default();
        let once: Vec<CorpusRecord> =
            records(seed, 50).into_iter().filter(|r| filter_text_content(r, &f).keep()).collect();
        let twice: Vec<CorpusRecord> = once.iter().filter(|r| filter_text_content(r, &f).keep()).cloned().collect();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn mix_is_reproducible_and_exact(seed in any::<u64>(), wa in 0.0f64..=1.0, target in 0usize..60) {
        let a: Vec<u32> = (0..60).collect();
        let b: Vec<u32> = (1000..1060).collect();
        let sources = [(&a[..], wa), (&b[..], 1.0 - wa)];
        let m1 = mix(&sources, target, seed).unwrap();
        let m2 = mix(&sources, target, seed).unwrap();
        prop_assert_eq!(&m1, &m2);
        prop_assert_eq!(m1.len(), target);
        let quotas = sgp_core::corpus::mix_quotas(&[wa, 1.0 - wa], target).unwrap();
        prop_assert_eq!(m1.iter().filter(|x| **x < 1000).count(), quotas[0]);
    }
}
