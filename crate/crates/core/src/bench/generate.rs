//! Seeded template generation of benchmark prompts.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bench::{BenchPrompt, Category};

pub const COMMON_OBJECTS: [&str; 80] = [
    "person", "bicycle", "car", "motorcycle", "airplane", "bus", "train", "truck", "boat", "traffic light",
    "fire hydrant", "stop sign", "parking meter", "bench", "bird", "cat", "dog", "horse", "sheep", "cow",
    "elephant", "bear", "zebra", "giraffe", "backpack", "umbrella", "handbag", "tie", "suitcase", "frisbee",
    "skis", "snowboard", "sports ball", "kite", "baseball bat", "baseball glove", "skateboard", "surfboard",
    "tennis racket", "bottle", "wine glass", "cup", "fork", "knife", "spoon", "bowl", "banana", "apple",
    "sandwich", "orange", "broccoli", "carrot", "hot dog", "pizza", "donut", "cake", "chair", "couch",
    "potted plant", "bed", "dining table", "toilet", "tv", "laptop", "mouse", "remote", "keyboard",
    "cell phone", "microwave", "oven", "toaster", "sink", "refrigerator", "book", "clock", "vase", "scissors",
    "teddy bear", "hair drier", "toothbrush",
];

const COLORS: [&str; 11] =
    ["red", "orange", "yellow", "green", "blue", "purple", "pink", "brown", "black", "white", "gray"];
const SHAPES: [&str; 10] =
    ["round", "square", "triangular", "rectangular", "oval", "circular", "cubic", "spherical", "cylindrical", "conical"];
const TEXTURES: [&str; 8] = ["wooden", "metallic", "plastic", "glass", "fabric", "leather", "rubber", "fluffy"];
const REL_2D: [&str; 7] =
    ["on the left of", "on the right of", "on the top of", "on the bottom of", "near", "next to", "on side of"];
const REL_3D: [&str; 3] = ["in front of", "behind", "hidden by"];
const REL_IMPLICIT: [&str; 8] =
    ["holding", "wearing", "riding", "watching", "playing with", "sitting on", "looking at", "carrying"];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchConfig {
    /// Prompts for each of the six binding and relation sub-categories.
    pub per_subcategory: usize,
    /// Numeracy prompts per total object count.
    pub numeracy_per_count: usize,
    pub min_total: u32,
    pub max_total: u32,
    /// Most distinct object kinds in one numeracy prompt.
    pub max_kinds: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { per_subcategory: 400, numeracy_per_count: 100, min_total: 3, max_total: 10, max_kinds: 3 }
    }
}

pub fn generate_compbench(seed: u64) -> Vec<BenchPrompt> {
    generate_compbench_with(seed, &BenchConfig::default())
}

pub fn generate_compbench_with(seed: u64, cfg: &BenchConfig) -> Vec<BenchPrompt> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for cat in Category::ALL.iter().copied().filter(|c| *c != Category::Numeracy) {
        for i in 0..cfg.per_subcategory {
            let objs = pick_objects(&mut rng, 2);
            let text = match cat {
                Category::Color => binding(&mut rng, &COLORS, &objs),
                Category::Shape => binding(&mut rng, &SHAPES, &objs),
                Category::Texture => binding(&mut rng, &TEXTURES, &objs),
                Category::Rel2d => relation(&mut rng, &REL_2D, &objs),
                Category::Rel3d => relation(&mut rng, &REL_3D, &objs),
                _ => relation(&mut rng, &REL_IMPLICIT, &objs),
            };
            out.push(BenchPrompt { id: format!("{}-{:04}", cat.name(), i), category: cat, text, numeracy_spec: None });
        }
    }
    let mut i = 0;
    for total in cfg.min_total..=cfg.max_total {
        for _ in 0..cfg.numeracy_per_count {
            let kinds = rng.gen_range(1..=cfg.max_kinds.min(total as usize));
            let objs = pick_objects(&mut rng, kinds);
            let counts = split_count(&mut rng, total, kinds);
            let spec: Vec<(String, u32)> = objs.iter().map(|o| o.to_string()).zip(counts).collect();
            let text = numeracy_text(&spec);
            out.push(BenchPrompt {
                id: format!("numeracy-{i:04}"),
                category: Category::Numeracy,
                text,
                numeracy_spec: Some(spec),
            });
            i += 1;
        }
    }
    out
}

fn pick_objects(rng: &mut ChaCha8Rng, n: usize) -> Vec<&'static str> {
    COMMON_OBJECTS.choose_multiple(rng, n).copied().collect()
}

fn article(word: &str) -> &'static str {
    if word.starts_with(['a', 'e', 'i', 'o', 'u']) {
        "an"
    } else {
        "a"
    }
}

fn with_article(phrase: &str) -> String {
    format!("{} {phrase}", article(phrase))
}

fn binding(rng: &mut ChaCha8Rng, attrs: &[&str], objs: &[&str]) -> String {
    let a = attrs.choose_multiple(rng, 2).copied().collect::<Vec<_>>();
    format!(
        "{} and {}",
        with_article(&format!("{} {}", a[0], objs[0])),
        with_article(&format!("{} {}", a[1], objs[1]))
    )
}

fn relation(rng: &mut ChaCha8Rng, rels: &[&str], objs: &[&str]) -> String {
    let r = rels.choose(rng).expect("non-empty");
    format!("{} {r} {}", with_article(objs[0]), with_article(objs[1]))
}

/// Uniform composition of `total` into `parts` positive counts.
fn split_count(rng: &mut ChaCha8Rng, total: u32, parts: usize) -> Vec<u32> {
    let mut cuts: Vec<u32> = rand::seq::index::sample(rng, total as usize - 1, parts - 1)
        .into_iter()
        .map(|c| c as u32 + 1)
        .collect();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(parts);
    let mut prev = 0;
    for c in cuts.into_iter().chain([total]) {
        out.push(c - prev);
        prev = c;
    }
    out
}

pub fn number_word(n: u32) -> &'static str {
    ["zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"]
        .get(n as usize)
        .copied()
        .unwrap_or("many")
}

/// English plural of an object noun; the last word of compounds is inflected.
pub fn plural(noun: &str) -> String {
    let (head, last) = match noun.rsplit_once(' ') {
        Some((h, l)) => (format!("{h} "), l),
        None => (String::new(), noun),
    };
    let p = match last {
        "person" => "people".to_string(),
        "mouse" => "mice".to_string(),
        "knife" => "knives".to_string(),
        "sheep" | "skis" | "scissors" => last.to_string(),
        l if l.ends_with("s") || l.ends_with("sh") || l.ends_with("ch") || l.ends_with('x') => format!("{l}es"),
        l => format!("{l}s"),
    };
    format!("{head}{p}")
}

fn numeracy_text(spec: &[(String, u32)]) -> String {
    let parts: Vec<String> = spec
        .iter()
        .map(|(o, c)| if *c == 1 { with_article(o) } else { format!("{} {}", number_word(*c), plural(o)) })
        .collect();
    match parts.len() {
        1 => parts[0].clone(),
        n => format!("{} and {}", parts[..n - 1].join(", "), parts[n - 1]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plurals() {
        assert_eq!(plural("apple"), "apples");
        assert_eq!(plural("bus"), "buses");
        assert_eq!(plural("wine glass"), "wine glasses");
        assert_eq!(plural("couch"), "couches");
        assert_eq!(plural("person"), "people");
        assert_eq!(plural("scissors"), "scissors");
    }

    #[test]
    fn split_is_positive_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for total in 3..=10 {
            for parts in 1..=3 {
                let s = split_count(&mut rng, total, parts);
                assert_eq!(s.len(), parts);
                assert_eq!(s.iter().sum::<u32>(), total);
                assert!(s.iter().all(|c| *c >= 1));
            }
        }
    }

    #[test]
    fn numeracy_phrasing() {
        let spec = vec![("apple".to_string(), 3), ("banana".to_string(), 4)];
        assert_eq!(numeracy_text(&spec), "three apples and four bananas");
        let spec = vec![("orange".to_string(), 1), ("cup".to_string(), 1), ("dog".to_string(), 2)];
        assert_eq!(numeracy_text(&spec), "an orange, a cup and two dogs");
    }
}
