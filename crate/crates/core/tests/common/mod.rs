//! Shared generators for the integration tests.

#![allow(dead_code)]

use rand::Rng;

pub const VIEW: f64 = 100.0;

const PAINTS: [&str; 10] =
    ["red", "blue", "#0a0", "#123456", "orange", "black", "rgb(200,30,90)", "none", "teal", "#fc0"];

fn coord<R: Rng>(rng: &mut R) -> f64 {
    (rng.gen_range(-10.0..110.0_f64) * 4.0).round() / 4.0
}

fn paint<R: Rng>(rng: &mut R) -> &'static str {
    PAINTS[rng.gen_range(0..PAINTS.len())]
}

fn style<R: Rng>(rng: &mut R) -> String {
    let mut s = format!(r#" fill="{}""#, paint(rng));
    if rng.gen_bool(0.3) {
        s += &format!(r#" stroke="{}" stroke-width="{:.1}""#, paint(rng), rng.gen_range(0.5..4.0));
    }
    if rng.gen_bool(0.2) {
        s += &format!(r#" fill-opacity="{:.2}""#, rng.gen_range(0.1..1.0));
    }
    if rng.gen_bool(0.1) {
        s += r#" fill-rule="evenodd""#;
    }
    s
}

/// One random primitive or group, possibly transformed.
pub fn random_element<R: Rng>(rng: &mut R, depth: usize) -> String {
    let pick = if depth < 2 { rng.gen_range(0..9) } else { rng.gen_range(0..8) };
    let st = style(rng);
    match pick {
        0 => format!(
            r#"<rect x="{}" y="{}" width="{:.1}" height="{:.1}"{st}/>"#,
            coord(rng),
            coord(rng),
            rng.gen_range(1.0..60.0),
            rng.gen_range(1.0..60.0)
        ),
        1 => format!(r#"<circle cx="{}" cy="{}" r="{:.1}"{st}/>"#, coord(rng), coord(rng), rng.gen_range(1.0..40.0)),
        2 => format!(
            r#"<ellipse cx="{}" cy="{}" rx="{:.1}" ry="{:.1}"{st}/>"#,
            coord(rng),
            coord(rng),
            rng.gen_range(1.0..40.0),
            rng.gen_range(1.0..40.0)
        ),
        3 => format!(
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="{:.1}"/>"#,
            coord(rng),
            coord(rng),
            coord(rng),
            coord(rng),
            paint(rng),
            rng.gen_range(0.5..5.0)
        ),
        4 | 5 => {
            let n = rng.gen_range(3..7);
            let pts: Vec<String> = (0..n).map(|_| format!("{},{}", coord(rng), coord(rng))).collect();
            let tag = if pick == 4 { "polygon" } else { "polyline" };
            format!(r#"<{tag} points="{}"{st}/>"#, pts.join(" "))
        }
        6 | 7 => {
            let mut d = format!("M{} {}", coord(rng), coord(rng));
            for _ in 0..rng.gen_range(1..5) {
                d += &match rng.gen_range(0..4) {
                    0 => format!(" L{} {}", coord(rng), coord(rng)),
                    1 => format!(" Q{} {} {} {}", coord(rng), coord(rng), coord(rng), coord(rng)),
                    2 => format!(" C{} {} {} {} {} {}", coord(rng), coord(rng), coord(rng), coord(rng), coord(rng), coord(rng)),
                    _ => format!(" A{:.1} {:.1} 0 {} {} {} {}", rng.gen_range(5.0..40.0), rng.gen_range(5.0..40.0), rng.gen_range(0..2), rng.gen_range(0..2), coord(rng), coord(rng)),
                };
            }
            if rng.gen_bool(0.5) {
                d += " Z";
            }
            format!(r#"<path d="{d}"{st}/>"#)
        }
        _ => {
            let n = rng.gen_range(1..4);
            let children: String = (0..n).map(|_| random_element(rng, depth + 1)).collect();
            let transform = match rng.gen_range(0..4) {
                0 => String::new(),
                1 => format!(r#" transform="translate({} {})""#, rng.gen_range(-20..20), rng.gen_range(-20..20)),
                2 => format!(r#" transform="rotate({} 50 50)""#, rng.gen_range(-90..90)),
                _ => format!(r#" transform="scale({:.2})""#, rng.gen_range(0.5..1.5)),
            };
            let opacity = if rng.gen_bool(0.3) { format!(r#" opacity="{:.2}""#, rng.gen_range(0.2..1.0)) } else { String::new() };
            format!(r#"<g{transform}{opacity}>{children}</g>"#)
        }
    }
}

/// An element whose painted area, stroke included, lies right of or below
/// the 0..100 viewBox.
pub fn outside_element<R: Rng>(rng: &mut R) -> String {
    let (x, y) = (rng.gen_range(110.0..200.0_f64).round(), rng.gen_range(-50.0..150.0_f64).round());
    match rng.gen_range(0..4) {
        0 => format!(r#"<rect x="{x}" y="{y}" width="30" height="20" fill="{}" stroke="red" stroke-width="4"/>"#, paint(rng)),
        1 => format!(r#"<circle cx="{}" cy="{y}" r="8" fill="{}"/>"#, x + 10.0, paint(rng)),
        2 => format!(r#"<path d="M{x} 0 L{} 100 Q{} 50 {x} 0 Z" fill="blue"/>"#, x + 40.0, x + 80.0),
        _ => format!(r#"<g transform="translate(300 0)">{}</g>"#, inner_box_element(rng)),
    }
}

/// Anything inside the 0..100 box; stays inside after a 300-unit shift.
fn inner_box_element<R: Rng>(rng: &mut R) -> String {
    format!(r#"<rect x="{}" y="{}" width="40" height="40" fill="{}"/>"#, rng.gen_range(0..60), rng.gen_range(0..60), paint(rng))
}

pub fn wrap(elements: &[String]) -> String {
    format!(r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {VIEW} {VIEW}">{}</svg>"#, elements.concat())
}

pub fn random_elements<R: Rng>(rng: &mut R, max: usize) -> Vec<String> {
    let n = rng.gen_range(1..=max);
    (0..n).map(|_| random_element(rng, 0)).collect()
}

pub fn respond(svg: &str) -> String {
    format!("<THINK>plan</THINK><ANSWER>{svg}</ANSWER>")
}
