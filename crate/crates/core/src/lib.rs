//! SVG program generation with verifiable rewards: program model, rasterizer,
//! embeddings, reward fusion, GRPO, benchmark scoring and corpus tooling.

pub mod geom;
pub mod program;
pub mod embed;
pub mod raster;
pub mod grpo;
pub mod reward;
pub mod bench;
pub mod analysis;
pub mod corpus;
pub mod io;
