//! Numerical laboratory for the Brouwer degree of Hölder-continuous maps.
//!
//! The crate is split along the computational pipeline:
//!
//! * [`domain`]: bounded domains in R^2 / R^3, their boundary discretizations,
//!   box-counting dimension and Whitney-layer integrals of `dist(x, ∂Ω)^s`.
//! * [`holder`]: sampled maps and multiscale Hölder seminorm estimates.
//! * [`extension`]: the mollified Whitney-type extension `ṽ = Σ χ_k (φ_k ∗ v)`,
//!   gradient-bound diagnostics and preimage-count integrals.
//! * [`degree`]: degree of a map at a target point (winding number, solid angle,
//!   simplicial) and integer degree fields on target grids.
//! * [`sobolev`]: `L^p` norms and Gagliardo `W^{β,p}` seminorms of degree fields.
//! * [`chain`]: the sphere-chain boundary map whose degree is not `L^p`.
//! * [`lab`]: experiment configuration, result ledgers and SVG plots.

pub mod chain;
pub mod degree;
pub mod domain;
mod error;
pub mod extension;
pub mod geom;
pub mod holder;
pub mod lab;
pub mod maps;
pub mod quad;
pub mod sobolev;
pub mod stats;

pub use error::{Error, Result};
pub use geom::Point;
