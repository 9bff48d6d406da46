//! Program model: response template, SVG subset parser, format gate.

mod banned;
pub mod color;
mod document;
mod parse;
mod response;
mod serialize;
pub mod syntax;
mod validate;

pub use banned::check_banned_tags;
pub use color::{Color, Paint};
pub use document::{
    Comment, ElementKind, FillRule, PathCommand, PathOp, Shape, StyleAttrs, SvgDocument,
    SvgElement, ViewBox,
};
pub use parse::{parse_svg, ParseError};
pub use response::{extract_response, ModelResponse};
pub use validate::{validate, validate_and_render, RenderCheck, Validated, ValidationReport};

/// Comments of a document in order, each with the number of primitives
/// emitted before it.
pub fn extract_comments(doc_source: &str) -> Result<Vec<(usize, String)>, ParseError> {
    let doc = parse_svg(doc_source)?;
    Ok(doc.comments.into_iter().map(|c| (c.index, c.text)).collect())
}
