use std::f64::consts::{FRAC_PI_2, PI};

use crate::geom::{Point, Transform};
use crate::program::{Color, FillRule, Paint, RenderCheck, Shape, SvgDocument, SvgElement};
use crate::raster::fill::{fill_scanline, CoverageMask, Frame};
use crate::raster::flatten::{flatten_path, Flattener, Subpath};
use crate::raster::stroke::stroke_polygons;
use crate::raster::{RasterImage, RenderError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderConfig {
    pub out_width: u32,
    pub out_height: u32,
    pub background: Color,
    /// Maximum chordal deviation in root viewBox units.
    pub curve_flatten_tolerance: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self { out_width: 384, out_height: 384, background: Color::WHITE, curve_flatten_tolerance: 0.25 }
    }
}

impl RenderConfig {
    pub fn with_size(width: u32, height: u32) -> Self {
        Self { out_width: width, out_height: height, ..Self::default() }
    }

    pub fn check(&self) -> Result<(), RenderError> {
        if self.out_width == 0 || self.out_height == 0 {
            return Err(RenderError::InvalidConfig("output size must be at least 1x1".to_string()));
        }
        if !(self.curve_flatten_tolerance > 0.0 && self.curve_flatten_tolerance.is_finite()) {
            return Err(RenderError::InvalidConfig("flatten tolerance must be positive".to_string()));
        }
        Ok(())
    }
}

impl RenderCheck for RenderConfig {
    fn render_document(&self, doc: &SvgDocument) -> Result<RasterImage, RenderError> {
        render(doc, self)
    }
}

/// Style after inheritance.
#[derive(Debug, Clone, Copy)]
struct Resolved {
    fill: Paint,
    stroke: Paint,
    stroke_width: f64,
    fill_opacity: f64,
    stroke_opacity: f64,
    fill_rule: FillRule,
}

impl Default for Resolved {
    fn default() -> Self {
        Self {
            fill: Paint::Color(Color::BLACK),
            stroke: Paint::None,
            stroke_width: 1.0,
            fill_opacity: 1.0,
            stroke_opacity: 1.0,
            fill_rule: FillRule::NonZero,
        }
    }
}

impl Resolved {
    fn inherit(&self, el: &SvgElement) -> Resolved {
        let s = &el.style;
        Resolved {
            fill: s.fill.unwrap_or(self.fill),
            stroke: s.stroke.unwrap_or(self.stroke),
            stroke_width: s.stroke_width.unwrap_or(self.stroke_width),
            fill_opacity: s.fill_opacity.unwrap_or(self.fill_opacity),
            stroke_opacity: s.stroke_opacity.unwrap_or(self.stroke_opacity),
            fill_rule: s.fill_rule.unwrap_or(self.fill_rule),
        }
    }
}

/// Rasterizes `doc` with the viewBox fitted uniformly and centered.
pub fn render(doc: &SvgDocument, cfg: &RenderConfig) -> Result<RasterImage, RenderError> {
    cfg.check()?;
    let vb = doc.view_box;
    let (w, h) = (f64::from(cfg.out_width), f64::from(cfg.out_height));
    let s = (w / vb.width).min(h / vb.height);
    let (cw, ch) = (vb.width * s, vb.height * s);
    let (ox, oy) = ((w - cw) / 2.0, (h - ch) / 2.0);
    let device = Transform::new(s, 0.0, 0.0, s, ox - vb.min_x * s, oy - vb.min_y * s);
    if !device.is_invertible() || !device.is_finite() {
        return Err(RenderError::NonFinite);
    }
    let frame = Frame {
        width: cfg.out_width,
        height: cfg.out_height,
        clip_x0: ox,
        clip_y0: oy,
        clip_x1: ox + cw,
        clip_y1: oy + ch,
    };
    let painter = Painter { tolerance: cfg.curve_flatten_tolerance, device, frame };
    let mut canvas = RasterImage::filled(cfg.out_width, cfg.out_height, cfg.background);
    let root = Resolved::default();
    for el in &doc.elements {
        painter.paint(&mut canvas, el, &root, &Transform::IDENTITY)?;
    }
    Ok(canvas)
}

struct Painter {
    tolerance: f64,
    device: Transform,
    frame: Frame,
}

impl Painter {
    fn paint(
        &self,
        canvas: &mut RasterImage,
        el: &SvgElement,
        parent: &Resolved,
        parent_ctm: &Transform,
    ) -> Result<(), RenderError> {
        let ctm = parent_ctm.then_apply_to(&el.transform);
        if !ctm.is_finite() {
            return Err(RenderError::NonFinite);
        }
        if !ctm.is_invertible() {
            return Err(RenderError::SingularTransform);
        }
        let style = parent.inherit(el);
        let opacity = el.style.opacity;

        if let Shape::Group { children } = &el.shape {
            if opacity < 1.0 {
                let mut layer = canvas.clone();
                for c in children {
                    self.paint(&mut layer, c, &style, &ctm)?;
                }
                blend_layer(canvas, &layer, opacity);
            } else {
                for c in children {
                    self.paint(canvas, c, &style, &ctm)?;
                }
            }
            return Ok(());
        }

        let local_tol = self.tolerance / ctm.max_scale();
        let subpaths = shape_subpaths(&el.shape, local_tol)?;
        let full = self.device.then_apply_to(&ctm);

        let fill = style.fill.color();
        let stroke = style.stroke.color().filter(|_| style.stroke_width > 0.0);
        let fill_mask = match fill {
            Some(_) => Some(fill_scanline(&map_all(&subpaths, &full)?, style.fill_rule, &self.frame)),
            None => None,
        };
        let stroke_mask = match stroke {
            Some(_) => {
                let polys: Vec<Vec<Point>> = stroke_polygons(&subpaths, style.stroke_width);
                let polys = map_polys(&polys, &full)?;
                Some(fill_scanline(&polys, FillRule::NonZero, &self.frame))
            }
            None => None,
        };

        match (fill.zip(fill_mask), stroke.zip(stroke_mask)) {
            (Some((fc, fm)), Some((sc, sm))) if opacity < 1.0 => {
                let mut layer = canvas.clone();
                composite(&mut layer, &fm, fc, style.fill_opacity);
                composite(&mut layer, &sm, sc, style.stroke_opacity);
                blend_layer(canvas, &layer, opacity);
            }
            (f, s) => {
                if let Some((c, m)) = f {
                    composite(canvas, &m, c, opacity * style.fill_opacity);
                }
                if let Some((c, m)) = s {
                    composite(canvas, &m, c, opacity * style.stroke_opacity);
                }
            }
        }
        Ok(())
    }
}

fn map_all(subpaths: &[Subpath], t: &Transform) -> Result<Vec<Vec<Point>>, RenderError> {
    let polys: Vec<&[Point]> = subpaths.iter().map(|s| s.points.as_slice()).collect();
    map_slices(&polys, t)
}

fn map_polys(polys: &[Vec<Point>], t: &Transform) -> Result<Vec<Vec<Point>>, RenderError> {
    let polys: Vec<&[Point]> = polys.iter().map(Vec::as_slice).collect();
    map_slices(&polys, t)
}

fn map_slices(polys: &[&[Point]], t: &Transform) -> Result<Vec<Vec<Point>>, RenderError> {
    polys
        .iter()
        .map(|poly| {
            poly.iter()
                .map(|&p| {
                    let q = t.apply(p);
                    if q.is_finite() {
                        Ok(q)
                    } else {
                        Err(RenderError::NonFinite)
                    }
                })
                .collect()
        })
        .collect()
}

/// Source-over of a flat color through a binary mask.
fn composite(canvas: &mut RasterImage, mask: &CoverageMask, color: Color, alpha: f64) {
    if !(alpha > 0.0) {
        return;
    }
    let src = color.channels();
    let data = canvas.data_mut();
    for (i, _) in mask.bits().iter().enumerate().filter(|(_, b)| **b) {
        for (k, &s) in src.iter().enumerate() {
            let d = &mut data[i * 3 + k];
            *d = over(s, *d, alpha);
        }
    }
}

fn blend_layer(canvas: &mut RasterImage, layer: &RasterImage, alpha: f64) {
    let alpha = alpha.clamp(0.0, 1.0);
    for (d, &s) in canvas.data_mut().iter_mut().zip(layer.data()) {
        *d = over(s, *d, alpha);
    }
}

/// `round(a·c + (1−a)·b)`.
pub fn over(c: u8, b: u8, a: f64) -> u8 {
    if a >= 1.0 {
        return c;
    }
    (a * f64::from(c) + (1.0 - a) * f64::from(b)).round() as u8
}

/// Local-space outline of a primitive. Groups have none.
fn shape_subpaths(shape: &Shape, tol: f64) -> Result<Vec<Subpath>, RenderError> {
    let finite = |vals: &[f64]| vals.iter().all(|v| v.is_finite());
    match shape {
        Shape::Rect { x, y, width, height, rx, ry } => {
            if !finite(&[*x, *y, *width, *height]) {
                return Err(RenderError::NonFinite);
            }
            if *width <= 0.0 || *height <= 0.0 {
                return Ok(Vec::new());
            }
            let (rx, ry) = match (rx, ry) {
                (None, None) => (0.0, 0.0),
                (Some(r), None) | (None, Some(r)) => (*r, *r),
                (Some(a), Some(b)) => (*a, *b),
            };
            let rx = rx.max(0.0).min(width / 2.0);
            let ry = ry.max(0.0).min(height / 2.0);
            let mut f = Flattener::new(tol);
            let (x0, y0, x1, y1) = (*x, *y, x + width, y + height);
            if rx == 0.0 || ry == 0.0 {
                f.begin(Point::new(x0, y0));
                f.line_to(Point::new(x1, y0))?;
                f.line_to(Point::new(x1, y1))?;
                f.line_to(Point::new(x0, y1))?;
            } else {
                f.begin(Point::new(x0 + rx, y0));
                f.line_to(Point::new(x1 - rx, y0))?;
                f.ellipse_arc(Point::new(x1 - rx, y0 + ry), rx, ry, 0.0, 1.0, -FRAC_PI_2, FRAC_PI_2, None)?;
                f.line_to(Point::new(x1, y1 - ry))?;
                f.ellipse_arc(Point::new(x1 - rx, y1 - ry), rx, ry, 0.0, 1.0, 0.0, FRAC_PI_2, None)?;
                f.line_to(Point::new(x0 + rx, y1))?;
                f.ellipse_arc(Point::new(x0 + rx, y1 - ry), rx, ry, 0.0, 1.0, FRAC_PI_2, FRAC_PI_2, None)?;
                f.line_to(Point::new(x0, y0 + ry))?;
                f.ellipse_arc(Point::new(x0 + rx, y0 + ry), rx, ry, 0.0, 1.0, PI, FRAC_PI_2, None)?;
            }
            f.close();
            Ok(f.finish())
        }
        Shape::Circle { cx, cy, r } => ellipse(*cx, *cy, *r, *r, tol),
        Shape::Ellipse { cx, cy, rx, ry } => ellipse(*cx, *cy, *rx, *ry, tol),
        Shape::Line { x1, y1, x2, y2 } => {
            if !finite(&[*x1, *y1, *x2, *y2]) {
                return Err(RenderError::NonFinite);
            }
            Ok(vec![Subpath { points: vec![Point::new(*x1, *y1), Point::new(*x2, *y2)], closed: false }])
        }
        Shape::Polyline { points } | Shape::Polygon { points } => {
            if !points.iter().all(|p| p.is_finite()) {
                return Err(RenderError::NonFinite);
            }
            if points.len() < 2 {
                return Ok(Vec::new());
            }
            let closed = matches!(shape, Shape::Polygon { .. });
            Ok(vec![Subpath { points: points.clone(), closed }])
        }
        Shape::Path { commands } => flatten_path(commands, tol),
        Shape::Group { .. } => Ok(Vec::new()),
    }
}

fn ellipse(cx: f64, cy: f64, rx: f64, ry: f64, tol: f64) -> Result<Vec<Subpath>, RenderError> {
    if ![cx, cy, rx, ry].iter().all(|v| v.is_finite()) {
        return Err(RenderError::NonFinite);
    }
    if rx <= 0.0 || ry <= 0.0 {
        return Ok(Vec::new());
    }
    let mut f = Flattener::new(tol);
    let start = Point::new(cx + rx, cy);
    f.begin(start);
    f.ellipse_arc(Point::new(cx, cy), rx, ry, 0.0, 1.0, 0.0, 2.0 * PI, Some(start))?;
    f.close();
    Ok(f.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::parse_svg;

    fn draw(src: &str, w: u32, h: u32) -> RasterImage {
        render(&parse_svg(src).unwrap(), &RenderConfig::with_size(w, h)).unwrap()
    }

    #[test]
    fn full_cover_rect_is_uniform() {
        let img = draw(r#"<svg viewBox="0 0 10 10"><rect width="10" height="10" fill="red"/></svg>"#, 16, 16);
        assert!(img.pixels().all(|p| p == [255, 0, 0]));
    }

    #[test]
    fn later_elements_occlude() {
        let img = draw(
            r#"<svg viewBox="0 0 10 10"><rect width="6" height="6" fill="red"/><rect x="4" y="4" width="6" height="6" fill="blue"/></svg>"#,
            10,
            10,
        );
        assert_eq!(img.pixel(5, 5), [0, 0, 255]);
        assert_eq!(img.pixel(1, 1), [255, 0, 0]);
        assert_eq!(img.pixel(9, 0), [255, 255, 255]);
    }

    #[test]
    fn letterbox_keeps_background_outside_viewbox() {
        let img = draw(r#"<svg viewBox="0 0 10 5"><rect x="-50" y="-50" width="100" height="100" fill="black"/></svg>"#, 20, 20);
        assert_eq!(img.pixel(10, 2), [255, 255, 255]);
        assert_eq!(img.pixel(10, 10), [0, 0, 0]);
        assert_eq!(img.pixel(10, 17), [255, 255, 255]);
    }

    #[test]
    fn singular_transform_fails() {
        let doc = parse_svg(r#"<svg viewBox="0 0 10 10"><g transform="scale(0)"><rect width="1" height="1"/></g></svg>"#).unwrap();
        assert_eq!(render(&doc, &RenderConfig::default()), Err(RenderError::SingularTransform));
    }

    #[test]
    fn opacity_folds_into_fill() {
        let img = draw(r#"<svg viewBox="0 0 1 1"><rect width="1" height="1" fill="black" fill-opacity="0.5" opacity="0.5"/></svg>"#, 1, 1);
        assert_eq!(img.pixel(0, 0), [191, 191, 191]);
    }

    #[test]
    fn element_opacity_with_fill_and_stroke_uses_layer() {
        let img = draw(
            r#"<svg viewBox="0 0 4 4"><rect width="4" height="4" fill="black" stroke="black" stroke-width="2" opacity="0.5"/></svg>"#,
            4,
            4,
        );
        // Fill and stroke overlap at the border but the element is blended once.
        assert!(img.pixels().all(|p| p == [128, 128, 128]));
    }

    #[test]
    fn invalid_config_rejected() {
        let doc = parse_svg(r#"<svg viewBox="0 0 1 1"/>"#).unwrap();
        assert!(render(&doc, &RenderConfig::with_size(0, 4)).is_err());
        let cfg = RenderConfig { curve_flatten_tolerance: 0.0, ..RenderConfig::default() };
        assert!(render(&doc, &cfg).is_err());
    }
}
