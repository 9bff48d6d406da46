//! Deterministic, aliased SVG rasterizer.

mod fill;
mod flatten;
mod image;
mod render;
mod stroke;

use thiserror::Error;

pub use fill::{fill_scanline, CoverageMask, Frame};
pub use flatten::{flatten_path, Subpath, MAX_SEGMENTS};
pub use image::{ImageError, RasterImage};
pub use render::{over, render, RenderConfig};
pub use stroke::{stroke_polygons, MITER_LIMIT};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("invalid render config: {0}")]
    InvalidConfig(String),
    #[error("non-invertible transform")]
    SingularTransform,
    #[error("path flattening exceeded {MAX_SEGMENTS} segments")]
    FlattenOverflow,
    #[error("non-finite coordinate")]
    NonFinite,
}
