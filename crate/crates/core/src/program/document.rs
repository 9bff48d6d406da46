//! Element tree for the supported SVG subset.

use std::fmt;

use crate::geom::{Point, Transform};
use crate::program::color::Paint;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewBox {
    pub min_x: f64,
    pub min_y: f64,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FillRule {
    #[default]
    NonZero,
    EvenOdd,
}

impl FillRule {
    pub fn as_str(self) -> &'static str {
        match self {
            FillRule::NonZero => "nonzero",
            FillRule::EvenOdd => "evenodd",
        }
    }
}

/// Presentation attributes as written on one element.
///
/// Inherited properties stay `None` when unspecified so the renderer can
/// resolve them against the parent chain. `opacity` is not inherited.
#[derive(Debug, Clone, PartialEq)]
pub struct StyleAttrs {
    pub fill: Option<Paint>,
    pub stroke: Option<Paint>,
    pub stroke_width: Option<f64>,
    pub opacity: f64,
    pub fill_opacity: Option<f64>,
    pub stroke_opacity: Option<f64>,
    pub fill_rule: Option<FillRule>,
}

impl Default for StyleAttrs {
    fn default() -> Self {
        Self {
            fill: None,
            stroke: None,
            stroke_width: None,
            opacity: 1.0,
            fill_opacity: None,
            stroke_opacity: None,
            fill_rule: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElementKind {
    Rect,
    Circle,
    Ellipse,
    Line,
    Polyline,
    Polygon,
    Path,
    Group,
}

impl ElementKind {
    pub const ALL: [ElementKind; 8] = [
        ElementKind::Rect,
        ElementKind::Circle,
        ElementKind::Ellipse,
        ElementKind::Line,
        ElementKind::Polyline,
        ElementKind::Polygon,
        ElementKind::Path,
        ElementKind::Group,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ElementKind::Rect => "rect",
            ElementKind::Circle => "circle",
            ElementKind::Ellipse => "ellipse",
            ElementKind::Line => "line",
            ElementKind::Polyline => "polyline",
            ElementKind::Polygon => "polygon",
            ElementKind::Path => "path",
            ElementKind::Group => "g",
        }
    }

    pub fn from_tag(tag: &str) -> Option<ElementKind> {
        ElementKind::ALL.into_iter().find(|k| k.tag() == tag)
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Rect { x: f64, y: f64, width: f64, height: f64, rx: Option<f64>, ry: Option<f64> },
    Circle { cx: f64, cy: f64, r: f64 },
    Ellipse { cx: f64, cy: f64, rx: f64, ry: f64 },
    Line { x1: f64, y1: f64, x2: f64, y2: f64 },
    Polyline { points: Vec<Point> },
    Polygon { points: Vec<Point> },
    Path { commands: Vec<PathCommand> },
    Group { children: Vec<SvgElement> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvgElement {
    pub shape: Shape,
    pub style: StyleAttrs,
    pub transform: Transform,
}

impl SvgElement {
    pub fn kind(&self) -> ElementKind {
        match self.shape {
            Shape::Rect { .. } => ElementKind::Rect,
            Shape::Circle { .. } => ElementKind::Circle,
            Shape::Ellipse { .. } => ElementKind::Ellipse,
            Shape::Line { .. } => ElementKind::Line,
            Shape::Polyline { .. } => ElementKind::Polyline,
            Shape::Polygon { .. } => ElementKind::Polygon,
            Shape::Path { .. } => ElementKind::Path,
            Shape::Group { .. } => ElementKind::Group,
        }
    }

    pub fn children(&self) -> &[SvgElement] {
        match &self.shape {
            Shape::Group { children } => children,
            _ => &[],
        }
    }
}

/// One path-data command, kept in the form it was written (absolute or relative).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathCommand {
    pub relative: bool,
    pub op: PathOp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathOp {
    MoveTo(Point),
    LineTo(Point),
    Horizontal(f64),
    Vertical(f64),
    Cubic { c1: Point, c2: Point, to: Point },
    Quad { c: Point, to: Point },
    Arc { rx: f64, ry: f64, rotation: f64, large_arc: bool, sweep: bool, to: Point },
    Close,
}

impl PathOp {
    pub fn letter(&self) -> char {
        match self {
            PathOp::MoveTo(_) => 'M',
            PathOp::LineTo(_) => 'L',
            PathOp::Horizontal(_) => 'H',
            PathOp::Vertical(_) => 'V',
            PathOp::Cubic { .. } => 'C',
            PathOp::Quad { .. } => 'Q',
            PathOp::Arc { .. } => 'A',
            PathOp::Close => 'Z',
        }
    }
}

/// A comment and the number of drawing primitives that precede it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comment {
    pub index: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvgDocument {
    pub view_box: ViewBox,
    pub width_attr: Option<f64>,
    pub height_attr: Option<f64>,
    pub elements: Vec<SvgElement>,
    pub comments: Vec<Comment>,
    pub warnings: Vec<String>,
}

impl SvgDocument {
    /// Leaf primitives in painter's order (groups are traversed, not yielded).
    pub fn primitives(&self) -> Vec<&SvgElement> {
        fn walk<'a>(els: &'a [SvgElement], out: &mut Vec<&'a SvgElement>) {
            for el in els {
                match &el.shape {
                    Shape::Group { children } => walk(children, out),
                    _ => out.push(el),
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.elements, &mut out);
        out
    }

    /// Equality ignoring parse warnings.
    pub fn same_structure(&self, other: &SvgDocument) -> bool {
        self.view_box == other.view_box
            && self.width_attr == other.width_attr
            && self.height_attr == other.height_attr
            && self.elements == other.elements
            && self.comments == other.comments
    }
}
