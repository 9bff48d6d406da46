//! Canonical SVG text for a parsed document.

use std::fmt::Write;

use crate::geom::Point;
use crate::program::document::{PathOp, Shape, StyleAttrs, SvgDocument, SvgElement};

impl SvgDocument {
    /// Serializes to SVG source that reparses to a structurally equal document.
    pub fn to_svg_string(&self) -> String {
        let vb = self.view_box;
        let mut out = String::new();
        let _ = write!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}""#,
            vb.min_x, vb.min_y, vb.width, vb.height
        );
        if let Some(w) = self.width_attr {
            let _ = write!(out, r#" width="{w}""#);
        }
        if let Some(h) = self.height_attr {
            let _ = write!(out, r#" height="{h}""#);
        }
        out.push('>');
        let mut w = Writer { out, comments: &self.comments, next_comment: 0, primitives: 0 };
        for el in &self.elements {
            w.element(el);
        }
        w.flush_comments(usize::MAX);
        let mut out = w.out;
        out.push_str("</svg>");
        out
    }
}

struct Writer<'a> {
    out: String,
    comments: &'a [crate::program::document::Comment],
    next_comment: usize,
    primitives: usize,
}

impl Writer<'_> {
    fn flush_comments(&mut self, up_to: usize) {
        while let Some(c) = self.comments.get(self.next_comment) {
            if c.index > up_to {
                break;
            }
            let _ = write!(self.out, "<!-- {} -->", c.text);
            self.next_comment += 1;
        }
    }

    fn element(&mut self, el: &SvgElement) {
        if !matches!(el.shape, Shape::Group { .. }) {
            self.flush_comments(self.primitives);
        }
        let tag = el.kind().tag();
        let _ = write!(self.out, "<{tag}");
        match &el.shape {
            Shape::Rect { x, y, width, height, rx, ry } => {
                self.attrs(&[("x", *x), ("y", *y), ("width", *width), ("height", *height)]);
                if let Some(rx) = rx {
                    self.attrs(&[("rx", *rx)]);
                }
                if let Some(ry) = ry {
                    self.attrs(&[("ry", *ry)]);
                }
            }
            Shape::Circle { cx, cy, r } => self.attrs(&[("cx", *cx), ("cy", *cy), ("r", *r)]),
            Shape::Ellipse { cx, cy, rx, ry } => {
                self.attrs(&[("cx", *cx), ("cy", *cy), ("rx", *rx), ("ry", *ry)])
            }
            Shape::Line { x1, y1, x2, y2 } => {
                self.attrs(&[("x1", *x1), ("y1", *y1), ("x2", *x2), ("y2", *y2)])
            }
            Shape::Polyline { points } | Shape::Polygon { points } => {
                let _ = write!(self.out, r#" points="{}""#, points_str(points));
            }
            Shape::Path { commands } => {
                let mut d = String::new();
                for cmd in commands {
                    if !d.is_empty() {
                        d.push(' ');
                    }
                    let letter = cmd.op.letter();
                    d.push(if cmd.relative { letter.to_ascii_lowercase() } else { letter });
                    match cmd.op {
                        PathOp::MoveTo(p) | PathOp::LineTo(p) => {
                            let _ = write!(d, " {} {}", p.x, p.y);
                        }
                        PathOp::Horizontal(v) | PathOp::Vertical(v) => {
                            let _ = write!(d, " {v}");
                        }
                        PathOp::Cubic { c1, c2, to } => {
                            let _ = write!(d, " {} {} {} {} {} {}", c1.x, c1.y, c2.x, c2.y, to.x, to.y);
                        }
                        PathOp::Quad { c, to } => {
                            let _ = write!(d, " {} {} {} {}", c.x, c.y, to.x, to.y);
                        }
                        PathOp::Arc { rx, ry, rotation, large_arc, sweep, to } => {
                            let _ = write!(
                                d,
                                " {rx} {ry} {rotation} {} {} {} {}",
                                u8::from(large_arc),
                                u8::from(sweep),
                                to.x,
                                to.y
                            );
                        }
                        PathOp::Close => {}
                    }
                }
                let _ = write!(self.out, r#" d="{d}""#);
            }
            Shape::Group { .. } => {}
        }
        self.style(&el.style);
        if !el.transform.is_identity() {
            let t = el.transform;
            let _ = write!(self.out, r#" transform="matrix({} {} {} {} {} {})""#, t.a, t.b, t.c, t.d, t.e, t.f);
        }
        match &el.shape {
            Shape::Group { children } => {
                self.out.push('>');
                for child in children {
                    self.element(child);
                }
                let _ = write!(self.out, "</{tag}>");
            }
            _ => {
                self.out.push_str("/>");
                self.primitives += 1;
            }
        }
    }

    fn attrs(&mut self, pairs: &[(&str, f64)]) {
        for (name, v) in pairs {
            let _ = write!(self.out, r#" {name}="{v}""#);
        }
    }

    fn style(&mut self, s: &StyleAttrs) {
        if let Some(p) = s.fill {
            let _ = write!(self.out, r#" fill="{p}""#);
        }
        if let Some(p) = s.stroke {
            let _ = write!(self.out, r#" stroke="{p}""#);
        }
        if let Some(w) = s.stroke_width {
            let _ = write!(self.out, r#" stroke-width="{w}""#);
        }
        if s.opacity != 1.0 {
            let _ = write!(self.out, r#" opacity="{}""#, s.opacity);
        }
        if let Some(v) = s.fill_opacity {
            let _ = write!(self.out, r#" fill-opacity="{v}""#);
        }
        if let Some(v) = s.stroke_opacity {
            let _ = write!(self.out, r#" stroke-opacity="{v}""#);
        }
        if let Some(r) = s.fill_rule {
            let _ = write!(self.out, r#" fill-rule="{}""#, r.as_str());
        }
    }
}

fn points_str(points: &[Point]) -> String {
    points.iter().map(|p| format!("{},{}", p.x, p.y)).collect::<Vec<_>>().join(" ")
}
