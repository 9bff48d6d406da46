//! Curve flattening to polylines with a chordal-deviation bound.

use std::f64::consts::PI;

use crate::geom::Point;
use crate::program::{PathCommand, PathOp};
use crate::raster::RenderError;

/// Upper bound on emitted line segments for one flattening call.
pub const MAX_SEGMENTS: usize = 1_000_000;

const MAX_DEPTH: u32 = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct Subpath {
    pub points: Vec<Point>,
    pub closed: bool,
}

/// Flattens path commands into subpaths.
///
/// Béziers are subdivided until their control polygon lies within
/// `tolerance` of the chord; arcs are sampled with a step whose sagitta is
/// bounded by `tolerance`. A closed subpath does not repeat its first point.
pub fn flatten_path(commands: &[PathCommand], tolerance: f64) -> Result<Vec<Subpath>, RenderError> {
    let mut f = Flattener::new(tolerance);
    let mut start = Point::default();
    let mut cur = Point::default();
    for cmd in commands {
        let base = if cmd.relative { cur } else { Point::default() };
        match cmd.op {
            PathOp::MoveTo(p) => {
                let p = base + p;
                f.begin(p);
                start = p;
                cur = p;
            }
            PathOp::LineTo(p) => {
                cur = base + p;
                f.line_to(cur)?;
            }
            PathOp::Horizontal(x) => {
                cur = Point::new(if cmd.relative { cur.x + x } else { x }, cur.y);
                f.line_to(cur)?;
            }
            PathOp::Vertical(y) => {
                cur = Point::new(cur.x, if cmd.relative { cur.y + y } else { y });
                f.line_to(cur)?;
            }
            PathOp::Cubic { c1, c2, to } => {
                let (c1, c2, to) = (base + c1, base + c2, base + to);
                f.cubic(cur, c1, c2, to, 0)?;
                cur = to;
            }
            PathOp::Quad { c, to } => {
                let (c, to) = (base + c, base + to);
                f.quad(cur, c, to, 0)?;
                cur = to;
            }
            PathOp::Arc { rx, ry, rotation, large_arc, sweep, to } => {
                let to = base + to;
                f.arc(cur, rx, ry, rotation, large_arc, sweep, to)?;
                cur = to;
            }
            PathOp::Close => {
                f.close();
                cur = start;
                // A command after Z without a moveto starts at the old start point.
                f.begin(start);
            }
        }
    }
    Ok(f.finish())
}

pub(crate) struct Flattener {
    tol: f64,
    segments: usize,
    done: Vec<Subpath>,
    current: Vec<Point>,
}

impl Flattener {
    pub(crate) fn new(tol: f64) -> Self {
        Self { tol, segments: 0, done: Vec::new(), current: Vec::new() }
    }

    pub(crate) fn begin(&mut self, p: Point) {
        self.flush(false);
        self.current.push(p);
    }

    fn flush(&mut self, closed: bool) {
        let pts = std::mem::take(&mut self.current);
        if pts.len() >= 2 {
            let mut pts = pts;
            if closed && pts.len() > 2 && pts.first() == pts.last() {
                pts.pop();
            }
            self.done.push(Subpath { points: pts, closed });
        }
    }

    pub(crate) fn close(&mut self) {
        self.flush(true);
    }

    pub(crate) fn finish(mut self) -> Vec<Subpath> {
        self.flush(false);
        self.done
    }

    fn count(&mut self, n: usize) -> Result<(), RenderError> {
        self.segments = self.segments.saturating_add(n);
        if self.segments > MAX_SEGMENTS {
            return Err(RenderError::FlattenOverflow);
        }
        Ok(())
    }

    pub(crate) fn line_to(&mut self, p: Point) -> Result<(), RenderError> {
        if !p.is_finite() {
            return Err(RenderError::NonFinite);
        }
        if self.current.is_empty() {
            self.current.push(Point::default());
        }
        self.count(1)?;
        self.current.push(p);
        Ok(())
    }

    fn cubic(&mut self, p0: Point, p1: Point, p2: Point, p3: Point, depth: u32) -> Result<(), RenderError> {
        if ![p0, p1, p2, p3].iter().all(|p| p.is_finite()) {
            return Err(RenderError::NonFinite);
        }
        let dev = p1.distance_to_segment(p0, p3).max(p2.distance_to_segment(p0, p3));
        if dev <= self.tol || depth >= MAX_DEPTH {
            return self.line_to(p3);
        }
        let p01 = p0.lerp(p1, 0.5);
        let p12 = p1.lerp(p2, 0.5);
        let p23 = p2.lerp(p3, 0.5);
        let a = p01.lerp(p12, 0.5);
        let b = p12.lerp(p23, 0.5);
        let m = a.lerp(b, 0.5);
        self.cubic(p0, p01, a, m, depth + 1)?;
        self.cubic(m, b, p23, p3, depth + 1)
    }

    fn quad(&mut self, p0: Point, p1: Point, p2: Point, depth: u32) -> Result<(), RenderError> {
        if ![p0, p1, p2].iter().all(|p| p.is_finite()) {
            return Err(RenderError::NonFinite);
        }
        if p1.distance_to_segment(p0, p2) <= self.tol || depth >= MAX_DEPTH {
            return self.line_to(p2);
        }
        let a = p0.lerp(p1, 0.5);
        let b = p1.lerp(p2, 0.5);
        let m = a.lerp(b, 0.5);
        self.quad(p0, a, m, depth + 1)?;
        self.quad(m, b, p2, depth + 1)
    }

    /// Endpoint-parameterized elliptical arc.
    #[allow(clippy::too_many_arguments)]
    fn arc(
        &mut self,
        p0: Point,
        rx: f64,
        ry: f64,
        rotation_deg: f64,
        large_arc: bool,
        sweep: bool,
        p1: Point,
    ) -> Result<(), RenderError> {
        if p0 == p1 {
            return Ok(());
        }
        let (mut rx, mut ry) = (rx.abs(), ry.abs());
        if rx == 0.0 || ry == 0.0 {
            return self.line_to(p1);
        }
        let (sin_phi, cos_phi) = rotation_deg.to_radians().sin_cos();
        let dx = (p0.x - p1.x) / 2.0;
        let dy = (p0.y - p1.y) / 2.0;
        let x1 = cos_phi * dx + sin_phi * dy;
        let y1 = -sin_phi * dx + cos_phi * dy;
        let lambda = (x1 * x1) / (rx * rx) + (y1 * y1) / (ry * ry);
        if lambda > 1.0 {
            let s = lambda.sqrt();
            rx *= s;
            ry *= s;
        }
        let num = rx * rx * ry * ry - rx * rx * y1 * y1 - ry * ry * x1 * x1;
        let den = rx * rx * y1 * y1 + ry * ry * x1 * x1;
        let mut coef = (num / den).max(0.0).sqrt();
        if large_arc == sweep {
            coef = -coef;
        }
        let cxp = coef * rx * y1 / ry;
        let cyp = -coef * ry * x1 / rx;
        let center = Point::new(
            cos_phi * cxp - sin_phi * cyp + (p0.x + p1.x) / 2.0,
            sin_phi * cxp + cos_phi * cyp + (p0.y + p1.y) / 2.0,
        );
        let angle = |ux: f64, uy: f64| uy.atan2(ux);
        let theta1 = angle((x1 - cxp) / rx, (y1 - cyp) / ry);
        let theta2 = angle((-x1 - cxp) / rx, (-y1 - cyp) / ry);
        let mut delta = theta2 - theta1;
        if sweep && delta < 0.0 {
            delta += 2.0 * PI;
        } else if !sweep && delta > 0.0 {
            delta -= 2.0 * PI;
        }
        self.ellipse_arc(center, rx, ry, sin_phi, cos_phi, theta1, delta, Some(p1))
    }

    /// Samples `center + R(φ)·(rx cos θ, ry sin θ)` over `[θ0, θ0+Δθ]`.
    ///
    /// Uniform steps `h` satisfy `h²·max(rx,ry)/8 ≤ tol`, which bounds the
    /// distance between each chord and the curve.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn ellipse_arc(
        &mut self,
        center: Point,
        rx: f64,
        ry: f64,
        sin_phi: f64,
        cos_phi: f64,
        theta0: f64,
        delta: f64,
        end: Option<Point>,
    ) -> Result<(), RenderError> {
        if !(center.is_finite() && rx.is_finite() && ry.is_finite() && delta.is_finite()) {
            return Err(RenderError::NonFinite);
        }
        let r = rx.max(ry);
        let max_step = (8.0 * self.tol / r).sqrt().min(PI / 2.0);
        let n_f = (delta.abs() / max_step).ceil().max(1.0);
        if n_f > (MAX_SEGMENTS - self.segments.min(MAX_SEGMENTS)) as f64 {
            return Err(RenderError::FlattenOverflow);
        }
        let n = n_f as usize;
        for k in 1..=n {
            let p = if k == n && end.is_some() {
                end.unwrap()
            } else {
                let t = theta0 + delta * (k as f64 / n as f64);
                let (s, c) = t.sin_cos();
                Point::new(
                    center.x + rx * c * cos_phi - ry * s * sin_phi,
                    center.y + rx * c * sin_phi + ry * s * cos_phi,
                )
            };
            self.line_to(p)?;
        }
        Ok(())
    }
}
