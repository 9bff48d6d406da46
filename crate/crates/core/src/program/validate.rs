//! Binary format gate: template structure, tag ban, parse, render.

use serde::{Deserialize, Serialize};

use crate::program::banned::check_banned_tags;
use crate::program::document::SvgDocument;
use crate::program::parse::parse_svg;
use crate::program::response::extract_response;
use crate::raster::{RasterImage, RenderError};

/// Anything that can decide renderability of a parsed document.
pub trait RenderCheck {
    fn render_document(&self, doc: &SvgDocument) -> Result<RasterImage, RenderError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub structure_ok: bool,
    pub parse_ok: bool,
    pub banned_tag_found: Option<String>,
    pub render_ok: bool,
    pub fmt_reward: u8,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.fmt_reward == 1
    }
}

/// A validation report plus the raster produced by the renderability check.
#[derive(Debug, Clone)]
pub struct Validated {
    pub report: ValidationReport,
    pub image: Option<RasterImage>,
}

pub fn validate(raw_text: &str, renderer: &dyn RenderCheck) -> ValidationReport {
    validate_and_render(raw_text, renderer).report
}

/// Runs the gate and keeps the rendered image so callers need not render twice.
pub fn validate_and_render(raw_text: &str, renderer: &dyn RenderCheck) -> Validated {
    let response = extract_response(raw_text);
    let answer = response.answer.as_deref();
    // Screen the answer when the template holds, otherwise the whole output.
    let banned = check_banned_tags(answer.unwrap_or(raw_text)).map(str::to_string);

    let doc = answer.and_then(|a| parse_svg(a).ok());
    let image = doc.as_ref().and_then(|d| renderer.render_document(d).ok());

    let report = ValidationReport {
        structure_ok: response.structure_ok,
        parse_ok: doc.is_some(),
        render_ok: image.is_some(),
        fmt_reward: u8::from(
            response.structure_ok && doc.is_some() && banned.is_none() && image.is_some(),
        ),
        banned_tag_found: banned,
    };
    Validated { report, image }
}
