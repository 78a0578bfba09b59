//! Differentiable rasterization primitives for deferred-shading pipelines.
//!
//! The crate exposes four primitives, each with a forward and a backward
//! pass:
//!
//! - [`raster`]: clip-space triangles to a per-pixel grid of triangle IDs,
//!   perspective-correct barycentrics, NDC depth and barycentric Jacobians.
//! - [`interpolate`]: per-vertex attributes to per-pixel values, optionally
//!   with screen-space derivatives.
//! - [`texture`]: trilinear MIP-mapped texture sampling.
//! - [`antialias`]: analytic post-shading edge antialiasing that yields
//!   visibility gradients for vertex positions.
//!
//! [`pipeline`] composes them into render graphs with a caller-supplied
//! shading stage. All primitives are generic over [`Real`], so the same code
//! runs in `f32` for rendering and `f64` for gradient verification.

pub mod antialias;
pub mod buffers;
pub mod clip;
mod error;
pub mod interpolate;
mod par;
pub mod pipeline;
pub mod raster;
mod real;
pub mod texture;

pub use buffers::{
    build_edge_adjacency, validate_geometry, AttributeSet, ClipVertexBuffer, EdgeAdjacency,
    GradBuffer, ImageGrid, IndexBuffer,
};
pub use error::{Error, Result};
pub use raster::{RasterGrid, Viewport};
pub use real::Real;
