//! Stroke outline expansion: butt caps, miter joins falling back to bevel.

use crate::geom::Point;
use crate::raster::flatten::Subpath;

pub const MITER_LIMIT: f64 = 4.0;

/// Expands polylines into polygons whose nonzero union is the stroke area.
///
/// Every piece is emitted with positive signed area so overlaps never cancel
/// under the nonzero rule.
pub fn stroke_polygons(subpaths: &[Subpath], width: f64) -> Vec<Vec<Point>> {
    let mut out = Vec::new();
    if !(width > 0.0) {
        return out;
    }
    let hw = width / 2.0;
    for sp in subpaths {
        let mut pts: Vec<Point> = Vec::with_capacity(sp.points.len());
        for &p in &sp.points {
            if pts.last() != Some(&p) {
                pts.push(p);
            }
        }
        if sp.closed && pts.len() > 2 && pts.first() == pts.last() {
            pts.pop();
        }
        if pts.len() < 2 {
            continue;
        }
        let n = pts.len();
        let seg_count = if sp.closed { n } else { n - 1 };
        for i in 0..seg_count {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            if let Some(quad) = segment_quad(a, b, hw) {
                push_oriented(&mut out, quad);
            }
        }
        let join_range = if sp.closed { 0..n } else { 1..n - 1 };
        for i in join_range {
            let prev = pts[(i + n - 1) % n];
            let cur = pts[i];
            let next = pts[(i + 1) % n];
            if let Some(poly) = join_polygon(prev, cur, next, hw) {
                push_oriented(&mut out, poly);
            }
        }
    }
    out
}

fn unit_normal(a: Point, b: Point) -> Option<Point> {
    let d = b - a;
    let len = d.length();
    if len == 0.0 || !len.is_finite() {
        return None;
    }
    Some(Point::new(-d.y / len, d.x / len))
}

fn segment_quad(a: Point, b: Point, hw: f64) -> Option<Vec<Point>> {
    let n = unit_normal(a, b)? * hw;
    Some(vec![a + n, b + n, b - n, a - n])
}

/// Wedge filling the gap on the outer side of the corner at `cur`.
fn join_polygon(prev: Point, cur: Point, next: Point, hw: f64) -> Option<Vec<Point>> {
    let n0 = unit_normal(prev, cur)?;
    let n1 = unit_normal(cur, next)?;
    let turn = (cur - prev).cross(next - cur);
    if turn == 0.0 {
        // Straight continuation needs no join; a full reversal gets none either (butt).
        return None;
    }
    // The outer side is opposite to the turn direction.
    let s = if turn > 0.0 { -1.0 } else { 1.0 };
    let o0 = cur + n0 * (s * hw);
    let o1 = cur + n1 * (s * hw);
    let cos_theta = n0.dot(n1).clamp(-1.0, 1.0);
    // Miter length over stroke width is 1 / sin(φ/2) = 1 / sqrt((1 + cos θ) / 2).
    let half = (1.0 + cos_theta) / 2.0;
    if half > 0.0 && 1.0 / half.sqrt() <= MITER_LIMIT {
        let bis = n0 + n1;
        let bl = bis.length();
        if bl > 0.0 {
            let tip = cur + bis * (s * hw / (bl * half.sqrt()));
            return Some(vec![cur, o0, tip, o1]);
        }
    }
    Some(vec![cur, o0, o1])
}

fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    (0..n).map(|i| poly[i].cross(poly[(i + 1) % n])).sum::<f64>() / 2.0
}

fn push_oriented(out: &mut Vec<Vec<Point>>, mut poly: Vec<Point>) {
    let area = signed_area(&poly);
    if area == 0.0 || !area.is_finite() {
        return;
    }
    if area < 0.0 {
        poly.reverse();
    }
    out.push(poly);
}
