//! Minimal SVG line charts built from the renderable subset (no text).

use crate::program::Color;

pub struct Series {
    pub points: Vec<(f64, f64)>,
    pub color: Color,
}

/// Plots series into a `width`×`height` chart with axes and a light grid.
/// Axis ranges cover all finite points.
pub fn line_chart_svg(series: &[Series], width: f64, height: f64) -> String {
    let pts = series.iter().flat_map(|s| &s.points).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let m = 0.08 * width.min(height);
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (width - 2.0 * m);
    let sy = |y: f64| height - m - (y - y0) / (y1 - y0) * (height - 2.0 * m);

    let mut out = format!(r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}">"#);
    out.push_str(&format!(r#"<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"#));
    for i in 1..5 {
        let y = m + (height - 2.0 * m) * i as f64 / 5.0;
        out.push_str(&format!(
            r##"<line x1="{m}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd" stroke-width="1"/>"##,
            width - m
        ));
    }
    out.push_str(&format!(
        r#"<polyline points="{m},{m} {m},{b:.2} {r:.2},{b:.2}" fill="none" stroke="black" stroke-width="1.5"/>"#,
        b = height - m,
        r = width - m
    ));
    for s in series {
        let coords: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        out.push_str(&format!(
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
            coords.join(" "),
            s.color
        ));
    }
    out.push_str("</svg>");
    out
}
