//! XML to [`SvgDocument`] for the supported subset.
//!
//! Unknown elements are hard errors; unknown attributes and style
//! properties are dropped with a warning.

use roxmltree::{Node, NodeType, ParsingOptions};
use thiserror::Error;

use crate::geom::Transform;
use crate::program::color::Paint;
use crate::program::document::{
    Comment, ElementKind, FillRule, Shape, StyleAttrs, SvgDocument, SvgElement, ViewBox,
};
use crate::program::syntax::{
    parse_length, parse_number_list, parse_path_data, parse_points, parse_transform,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("root element is <{0}>, expected <svg>")]
    NotSvgRoot(String),
    #[error("unknown element <{0}>")]
    UnknownElement(String),
    #[error("invalid value {value:?} for attribute {attr} on <{element}>: {reason}")]
    InvalidAttribute { element: String, attr: String, value: String, reason: String },
    #[error("no usable viewBox and no width/height fallback")]
    MissingViewBox,
}

pub fn parse_svg(source: &str) -> Result<SvgDocument, ParseError> {
    let opts = ParsingOptions { allow_dtd: true, ..ParsingOptions::default() };
    let xml = roxmltree::Document::parse_with_options(source, opts)
        .map_err(|e| ParseError::Xml(e.to_string()))?;
    let root = xml.root_element();
    if root.tag_name().name() != "svg" {
        return Err(ParseError::NotSvgRoot(root.tag_name().name().to_string()));
    }

    let mut cx = Context::default();

    // Comments outside the root element, before it.
    for node in xml.root().children() {
        if node == root {
            break;
        }
        if node.node_type() == NodeType::Comment {
            cx.push_comment(node.text().unwrap_or(""));
        }
    }

    let mut width_attr = None;
    let mut height_attr = None;
    let mut view_box = None;
    let mut root_style = StyleAttrs::default();
    for attr in root.attributes() {
        let name = attr.name();
        let value = attr.value();
        match name {
            "viewBox" => match parse_view_box(value) {
                Some(vb) => view_box = Some(vb),
                None => cx.warn(format!("ignoring invalid viewBox {value:?}")),
            },
            "width" | "height" => match parse_length(value) {
                Ok(v) if v > 0.0 => {
                    if name == "width" {
                        width_attr = Some(v);
                    } else {
                        height_attr = Some(v);
                    }
                }
                _ => cx.warn(format!("ignoring root {name}={value:?}")),
            },
            "transform" => cx.warn("ignoring transform on root <svg>".to_string()),
            _ => {
                if !apply_style_attr(&mut root_style, name, value, "svg", &mut cx)? {
                    cx.warn(format!("ignoring attribute {name} on <svg>"));
                }
            }
        }
    }
    let view_box = match (view_box, width_attr, height_attr) {
        (Some(vb), _, _) => vb,
        (None, Some(w), Some(h)) => ViewBox { min_x: 0.0, min_y: 0.0, width: w, height: h },
        _ => return Err(ParseError::MissingViewBox),
    };

    let children = parse_children(root, &mut cx)?;
    // Root-level presentation attributes behave like an enclosing group.
    let elements = if root_style == StyleAttrs::default() {
        children
    } else {
        vec![SvgElement {
            shape: Shape::Group { children },
            style: root_style,
            transform: Transform::IDENTITY,
        }]
    };

    let mut after_root = false;
    for node in xml.root().children() {
        if node == root {
            after_root = true;
            continue;
        }
        if after_root && node.node_type() == NodeType::Comment {
            cx.push_comment(node.text().unwrap_or(""));
        }
    }

    Ok(SvgDocument {
        view_box,
        width_attr,
        height_attr,
        elements,
        comments: cx.comments,
        warnings: cx.warnings,
    })
}

#[derive(Default)]
struct Context {
    primitives_seen: usize,
    comments: Vec<Comment>,
    warnings: Vec<String>,
}

impl Context {
    fn warn(&mut self, msg: String) {
        self.warnings.push(msg);
    }

    fn push_comment(&mut self, text: &str) {
        self.comments.push(Comment { index: self.primitives_seen, text: text.trim().to_string() });
    }
}

fn parse_view_box(value: &str) -> Option<ViewBox> {
    let nums = parse_number_list(value).ok()?;
    match nums.as_slice() {
        [x, y, w, h] if *w > 0.0 && *h > 0.0 => {
            Some(ViewBox { min_x: *x, min_y: *y, width: *w, height: *h })
        }
        _ => None,
    }
}

fn parse_children(parent: Node<'_, '_>, cx: &mut Context) -> Result<Vec<SvgElement>, ParseError> {
    let mut out = Vec::new();
    for node in parent.children() {
        match node.node_type() {
            NodeType::Element => {
                if let Some(el) = parse_element(node, cx)? {
                    out.push(el);
                }
            }
            NodeType::Comment => cx.push_comment(node.text().unwrap_or("")),
            NodeType::Text => {
                let text = node.text().unwrap_or("");
                if !text.trim().is_empty() {
                    cx.warn(format!("ignoring character data {:?}", text.trim()));
                }
            }
            _ => {}
        }
    }
    Ok(out)
}

fn parse_element(node: Node<'_, '_>, cx: &mut Context) -> Result<Option<SvgElement>, ParseError> {
    let tag = node.tag_name().name();
    let kind = match ElementKind::from_tag(tag) {
        Some(k) => k,
        None if tag == "svg" => {
            cx.warn("nested <svg> treated as a group; its viewport is ignored".to_string());
            ElementKind::Group
        }
        None => return Err(ParseError::UnknownElement(tag.to_string())),
    };

    let mut style = StyleAttrs::default();
    let mut transform = Transform::IDENTITY;
    let mut geom: Vec<(&str, &str)> = Vec::new();
    let mut style_decl: Option<&str> = None;

    for attr in node.attributes() {
        let name = attr.name();
        let value = attr.value();
        if name == "transform" {
            transform = parse_transform(value).map_err(|e| invalid(tag, name, value, &e.0))?;
        } else if name == "style" {
            style_decl = Some(value);
        } else if geometry_attrs(kind).contains(&name) {
            geom.push((name, value));
        } else if !apply_style_attr(&mut style, name, value, tag, cx)? {
            cx.warn(format!("ignoring attribute {name} on <{tag}>"));
        }
    }
    // Inline style declarations override presentation attributes.
    if let Some(decls) = style_decl {
        for decl in decls.split(';') {
            let decl = decl.trim();
            if decl.is_empty() {
                continue;
            }
            match decl.split_once(':') {
                Some((prop, value)) => {
                    let prop = prop.trim();
                    if !apply_style_attr(&mut style, prop, value.trim(), tag, cx)? {
                        cx.warn(format!("ignoring style property {prop} on <{tag}>"));
                    }
                }
                None => cx.warn(format!("ignoring malformed style declaration {decl:?}")),
            }
        }
    }

    let get = |key: &str| -> Result<Option<f64>, ParseError> {
        match geom.iter().find(|(n, _)| *n == key) {
            None => Ok(None),
            Some((n, v)) => parse_length(v).map(Some).map_err(|e| invalid(tag, n, v, &e.0)),
        }
    };
    let num = |key: &str| -> Result<f64, ParseError> { Ok(get(key)?.unwrap_or(0.0)) };

    let shape = match kind {
        ElementKind::Rect => Shape::Rect {
            x: num("x")?,
            y: num("y")?,
            width: num("width")?,
            height: num("height")?,
            rx: get("rx")?,
            ry: get("ry")?,
        },
        ElementKind::Circle => Shape::Circle { cx: num("cx")?, cy: num("cy")?, r: num("r")? },
        ElementKind::Ellipse => {
            Shape::Ellipse { cx: num("cx")?, cy: num("cy")?, rx: num("rx")?, ry: num("ry")? }
        }
        ElementKind::Line => {
            Shape::Line { x1: num("x1")?, y1: num("y1")?, x2: num("x2")?, y2: num("y2")? }
        }
        ElementKind::Polyline | ElementKind::Polygon => {
            let raw = geom.iter().find(|(n, _)| *n == "points").map(|(_, v)| *v).unwrap_or("");
            let points = parse_points(raw).map_err(|e| invalid(tag, "points", raw, &e.0))?;
            if kind == ElementKind::Polyline {
                Shape::Polyline { points }
            } else {
                Shape::Polygon { points }
            }
        }
        ElementKind::Path => {
            let raw = geom.iter().find(|(n, _)| *n == "d").map(|(_, v)| *v).unwrap_or("");
            let commands = parse_path_data(raw).map_err(|e| invalid(tag, "d", raw, &e.0))?;
            Shape::Path { commands }
        }
        ElementKind::Group => {
            if tag == "svg" {
                for (n, _) in &geom {
                    cx.warn(format!("ignoring attribute {n} on nested <svg>"));
                }
            }
            Shape::Group { children: Vec::new() }
        }
    };

    if kind != ElementKind::Group {
        cx.primitives_seen += 1;
        for child in node.children() {
            match child.node_type() {
                NodeType::Element => {
                    let name = child.tag_name().name();
                    if ElementKind::from_tag(name).is_some() || name == "svg" {
                        return Err(invalid(tag, "content", name, "primitives cannot have child elements"));
                    }
                    return Err(ParseError::UnknownElement(name.to_string()));
                }
                NodeType::Comment => cx.push_comment(child.text().unwrap_or("")),
                _ => {}
            }
        }
        return Ok(Some(SvgElement { shape, style, transform }));
    }

    let children = parse_children(node, cx)?;
    Ok(Some(SvgElement { shape: Shape::Group { children }, style, transform }))
}

fn geometry_attrs(kind: ElementKind) -> &'static [&'static str] {
    match kind {
        ElementKind::Rect => &["x", "y", "width", "height", "rx", "ry"],
        ElementKind::Circle => &["cx", "cy", "r"],
        ElementKind::Ellipse => &["cx", "cy", "rx", "ry"],
        ElementKind::Line => &["x1", "y1", "x2", "y2"],
        ElementKind::Polyline | ElementKind::Polygon => &["points"],
        ElementKind::Path => &["d"],
        ElementKind::Group => &["x", "y", "width", "height", "viewBox"],
    }
}

fn invalid(element: &str, attr: &str, value: &str, reason: &str) -> ParseError {
    ParseError::InvalidAttribute {
        element: element.to_string(),
        attr: attr.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

/// Applies one presentation property. Returns `false` when the property is
/// not part of the supported style model.
fn apply_style_attr(
    style: &mut StyleAttrs,
    name: &str,
    value: &str,
    tag: &str,
    cx: &mut Context,
) -> Result<bool, ParseError> {
    let value = value.trim();
    match name {
        "fill" | "stroke" => {
            if value == "inherit" {
                return Ok(true);
            }
            match Paint::parse(value) {
                Some(p) if name == "fill" => style.fill = Some(p),
                Some(p) => style.stroke = Some(p),
                None => cx.warn(format!("ignoring unsupported {name} value {value:?} on <{tag}>")),
            }
        }
        "stroke-width" => match parse_length(value) {
            Ok(w) if w >= 0.0 => style.stroke_width = Some(w),
            Ok(_) => cx.warn(format!("ignoring negative stroke-width on <{tag}>")),
            Err(e) => return Err(invalid(tag, name, value, &e.0)),
        },
        "opacity" | "fill-opacity" | "stroke-opacity" => {
            let v = parse_opacity(value).map_err(|r| invalid(tag, name, value, &r))?;
            match name {
                "opacity" => style.opacity = v,
                "fill-opacity" => style.fill_opacity = Some(v),
                _ => style.stroke_opacity = Some(v),
            }
        }
        "fill-rule" => match value {
            "nonzero" => style.fill_rule = Some(FillRule::NonZero),
            "evenodd" => style.fill_rule = Some(FillRule::EvenOdd),
            _ => cx.warn(format!("ignoring fill-rule {value:?} on <{tag}>")),
        },
        _ => return Ok(false),
    }
    Ok(true)
}

fn parse_opacity(value: &str) -> Result<f64, String> {
    let (text, scale) = match value.strip_suffix('%') {
        Some(p) => (p, 0.01),
        None => (value, 1.0),
    };
    crate::program::syntax::parse_number(text)
        .map(|v| (v * scale).clamp(0.0, 1.0))
        .map_err(|e| e.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::color::Color;

    #[test]
    fn single_rect() {
        let doc = parse_svg(
            r#"<svg viewBox="0 0 100 100"><rect x="0" y="0" width="50" height="50" fill="red"/></svg>"#,
        )
        .unwrap();
        assert_eq!(doc.elements.len(), 1);
        assert_eq!(doc.elements[0].kind(), ElementKind::Rect);
        assert_eq!(doc.elements[0].style.fill, Some(Paint::Color(Color::rgb(255, 0, 0))));
        assert_eq!(doc.view_box, ViewBox { min_x: 0.0, min_y: 0.0, width: 100.0, height: 100.0 });
    }

    #[test]
    fn unknown_element_fails() {
        assert_eq!(
            parse_svg(r#"<svg viewBox="0 0 1 1"><blink/></svg>"#),
            Err(ParseError::UnknownElement("blink".into()))
        );
        assert!(matches!(
            parse_svg(r#"<svg viewBox="0 0 1 1"><text>hi</text></svg>"#),
            Err(ParseError::UnknownElement(_))
        ));
    }

    #[test]
    fn path_with_three_commands() {
        let doc = parse_svg(r#"<svg viewBox="0 0 10 10"><path d="M 0 0 L 10 10 Z"/></svg>"#).unwrap();
        match &doc.elements[0].shape {
            Shape::Path { commands } => assert_eq!(commands.len(), 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn viewbox_fallback_and_failure() {
        let doc = parse_svg(r#"<svg width="20" height="10"/>"#).unwrap();
        assert_eq!(doc.view_box.width, 20.0);
        assert_eq!(doc.view_box.height, 10.0);
        let doc = parse_svg(r#"<svg viewBox="0 0 0 5" width="4px" height="4"/>"#).unwrap();
        assert_eq!(doc.view_box.width, 4.0);
        assert_eq!(parse_svg(r#"<svg/>"#), Err(ParseError::MissingViewBox));
        assert_eq!(parse_svg(r#"<svg width="10"/>"#), Err(ParseError::MissingViewBox));
        assert_eq!(parse_svg(r#"<svg viewBox="0 0 -1 5"/>"#), Err(ParseError::MissingViewBox));
    }

    #[test]
    fn malformed_xml_and_non_finite() {
        assert!(matches!(parse_svg("<svg viewBox=\"0 0 1 1\"><rect></svg>"), Err(ParseError::Xml(_))));
        assert!(matches!(parse_svg(""), Err(ParseError::Xml(_))));
        assert!(matches!(
            parse_svg(r#"<svg viewBox="0 0 1 1"><circle r="1e400"/></svg>"#),
            Err(ParseError::InvalidAttribute { .. })
        ));
        assert!(matches!(
            parse_svg(r#"<svg viewBox="0 0 1 1"><rect width="abc"/></svg>"#),
            Err(ParseError::InvalidAttribute { .. })
        ));
        assert_eq!(
            parse_svg(r#"<html viewBox="0 0 1 1"/>"#),
            Err(ParseError::NotSvgRoot("html".into()))
        );
    }

    #[test]
    fn unknown_attributes_are_warnings() {
        let doc = parse_svg(
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 4 4" id="root"><rect id="a" class="b" data-x="1" width="1" height="1"/></svg>"#,
        )
        .unwrap();
        assert_eq!(doc.elements.len(), 1);
        assert_eq!(doc.warnings.len(), 4, "{:?}", doc.warnings);
    }

    #[test]
    fn inline_style_overrides_attributes() {
        let doc = parse_svg(
            r#"<svg viewBox="0 0 4 4"><rect fill="red" style="fill: blue; stroke-width:2; foo: bar" width="1" height="1"/></svg>"#,
        )
        .unwrap();
        let st = &doc.elements[0].style;
        assert_eq!(st.fill, Some(Paint::Color(Color::rgb(0, 0, 255))));
        assert_eq!(st.stroke_width, Some(2.0));
        assert_eq!(doc.warnings.len(), 1);
    }

    #[test]
    fn comments_are_indexed_by_preceding_primitives() {
        let doc = parse_svg(
            r#"<svg viewBox="0 0 1 1"><!-- sky --><rect/><!-- sun (optional) --><circle/></svg>"#,
        )
        .unwrap();
        let got: Vec<_> = doc.comments.iter().map(|c| (c.index, c.text.as_str())).collect();
        assert_eq!(got, vec![(0, "sky"), (1, "sun (optional)")]);
    }

    #[test]
    fn groups_nest_in_document_order() {
        let doc = parse_svg(
            r#"<svg viewBox="0 0 1 1"><rect/><g fill="red"><circle/><g><line/></g></g><path d="M0 0"/></svg>"#,
        )
        .unwrap();
        let kinds: Vec<_> = doc.primitives().iter().map(|e| e.kind()).collect();
        assert_eq!(
            kinds,
            vec![ElementKind::Rect, ElementKind::Circle, ElementKind::Line, ElementKind::Path]
        );
        assert_eq!(doc.elements.len(), 3);
    }

    #[test]
    fn root_presentation_attributes_wrap_children() {
        let doc = parse_svg(r#"<svg viewBox="0 0 1 1" fill="green"><rect/></svg>"#).unwrap();
        assert_eq!(doc.elements.len(), 1);
        assert_eq!(doc.elements[0].kind(), ElementKind::Group);
    }
}
