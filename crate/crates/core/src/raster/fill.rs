//! Scanline polygon fill sampled at pixel centers.

use crate::geom::Point;
use crate::program::FillRule;

/// Output raster size plus the device-space clip rectangle.
///
/// A pixel can only be covered when its center lies in
/// `[clip_x0, clip_x1) × [clip_y0, clip_y1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub width: u32,
    pub height: u32,
    pub clip_x0: f64,
    pub clip_y0: f64,
    pub clip_x1: f64,
    pub clip_y1: f64,
}

impl Frame {
    pub fn full(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            clip_x0: 0.0,
            clip_y0: 0.0,
            clip_x1: f64::from(width),
            clip_y1: f64::from(height),
        }
    }

    /// Inclusive-exclusive pixel index range whose centers lie in `[lo, hi)`.
    fn center_range(lo: f64, hi: f64, n: u32) -> (u32, u32) {
        let first = (lo - 0.5).ceil().clamp(0.0, f64::from(n));
        let end = (hi - 0.5).ceil().clamp(0.0, f64::from(n));
        (first as u32, end.max(first) as u32)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl CoverageMask {
    pub fn empty(width: u32, height: u32) -> Self {
        Self { width, height, bits: vec![false; width as usize * height as usize] }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|b| *b)
    }

    pub(crate) fn bits(&self) -> &[bool] {
        &self.bits
    }

    fn set_span(&mut self, y: u32, x0: u32, x1: u32) {
        let row = y as usize * self.width as usize;
        for b in &mut self.bits[row + x0 as usize..row + x1 as usize] {
            *b = true;
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    y_top: f64,
    y_bottom: f64,
    x_at_top: f64,
    dxdy: f64,
    winding: i32,
}

/// Fills implicitly closed polygons given in device pixels.
///
/// Each edge covers the half-open interval `[y_top, y_bottom)` so shared
/// vertices are counted once.
pub fn fill_scanline(polygons: &[Vec<Point>], rule: FillRule, frame: &Frame) -> CoverageMask {
    let mut mask = CoverageMask::empty(frame.width, frame.height);
    let mut edges = Vec::new();
    for poly in polygons {
        let n = poly.len();
        if n < 2 {
            continue;
        }
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            if a.y == b.y {
                continue;
            }
            let (top, bottom, winding) = if a.y < b.y { (a, b, 1) } else { (b, a, -1) };
            edges.push(Edge {
                y_top: top.y,
                y_bottom: bottom.y,
                x_at_top: top.x,
                dxdy: (bottom.x - top.x) / (bottom.y - top.y),
                winding,
            });
        }
    }
    if edges.is_empty() {
        return mask;
    }
    edges.sort_by(|a, b| a.y_top.total_cmp(&b.y_top));

    let (row0, row1) = Frame::center_range(frame.clip_y0, frame.clip_y1, frame.height);
    let (col_lo, col_hi) = Frame::center_range(frame.clip_x0, frame.clip_x1, frame.width);
    let mut next = 0;
    let mut active: Vec<Edge> = Vec::new();
    let mut crossings: Vec<(f64, i32)> = Vec::new();
    for y in row0..row1 {
        let yc = f64::from(y) + 0.5;
        while next < edges.len() && edges[next].y_top <= yc {
            active.push(edges[next]);
            next += 1;
        }
        active.retain(|e| e.y_bottom > yc);
        if active.is_empty() {
            if next >= edges.len() {
                break;
            }
            continue;
        }
        crossings.clear();
        crossings.extend(
            active
                .iter()
                .filter(|e| e.y_top <= yc)
                .map(|e| (e.x_at_top + (yc - e.y_top) * e.dxdy, e.winding)),
        );
        crossings.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut winding = 0;
        for pair in crossings.windows(2) {
            winding += pair[0].1;
            let inside = match rule {
                FillRule::NonZero => winding != 0,
                FillRule::EvenOdd => winding % 2 != 0,
            };
            if !inside {
                continue;
            }
            let (x0, x1) = Frame::center_range(pair[0].0, pair[1].0, frame.width);
            let (x0, x1) = (x0.max(col_lo), x1.min(col_hi));
            if x0 < x1 {
                mask.set_span(y, x0, x1);
            }
        }
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[(f64, f64)]) -> Vec<Point> {
        v.iter().map(|&(x, y)| Point::new(x, y)).collect()
    }

    #[test]
    fn exact_square_covers_frame() {
        let m = fill_scanline(&[pts(&[(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)])], FillRule::NonZero, &Frame::full(2, 2));
        assert_eq!(m.count(), 4);
    }

    #[test]
    fn empty_set_gives_empty_mask() {
        assert!(fill_scanline(&[], FillRule::EvenOdd, &Frame::full(4, 4)).is_empty());
    }

    /// Winding number of `p` with respect to closed polygon `poly`.
    fn winding_number(poly: &[Point], p: Point) -> i32 {
        let mut w = 0;
        for i in 0..poly.len() {
            let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
            let side = (b - a).cross(p - a);
            if a.y <= p.y && b.y > p.y && side > 0.0 {
                w += 1;
            } else if a.y > p.y && b.y <= p.y && side < 0.0 {
                w -= 1;
            }
        }
        w
    }

    #[test]
    fn rules_differ_exactly_on_double_wound_region() {
        // Pentagram: the inner pentagon has winding number 2.
        let star: Vec<Point> = (0..5)
            .map(|k| {
                let t = std::f64::consts::PI * (-0.5 + 0.8 * k as f64);
                Point::new(16.0 + 14.3 * t.cos(), 16.0 + 14.3 * t.sin())
            })
            .collect();
        let frame = Frame::full(32, 32);
        let nz = fill_scanline(&[star.clone()], FillRule::NonZero, &frame);
        let eo = fill_scanline(&[star.clone()], FillRule::EvenOdd, &frame);
        let mut differing = 0;
        for y in 0..32 {
            for x in 0..32 {
                let w = winding_number(&star, Point::new(x as f64 + 0.5, y as f64 + 0.5));
                assert_eq!(nz.get(x, y), w != 0, "nonzero at {x},{y}");
                assert_eq!(eo.get(x, y), w % 2 != 0, "evenodd at {x},{y}");
                if nz.get(x, y) != eo.get(x, y) {
                    differing += 1;
                    assert_eq!(w.abs(), 2);
                }
            }
        }
        assert!(differing > 0);
    }

    #[test]
    fn clip_limits_coverage() {
        let frame = Frame { width: 4, height: 4, clip_x0: 1.0, clip_y0: 0.0, clip_x1: 3.0, clip_y1: 2.0 };
        let m = fill_scanline(&[pts(&[(-5.0, -5.0), (9.0, -5.0), (9.0, 9.0), (-5.0, 9.0)])], FillRule::NonZero, &frame);
        assert_eq!(m.count(), 4);
        assert!(m.get(1, 0) && m.get(2, 1) && !m.get(0, 0) && !m.get(1, 2));
    }
}
