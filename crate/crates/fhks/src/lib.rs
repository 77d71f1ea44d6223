// index-based loops mirror the stencil/flux arithmetic and keep the
// off-by-one structure of the face arrays visible
#![allow(clippy::needless_range_loop)]

//! Spectral laboratory for a fractional hyperbolic chemotaxis model:
//! Neumann cosine calculus, fractional operator families, the regularized
//! parabolic-elliptic solver, and theorem-level diagnostics.

pub mod chemo;
pub mod config;
pub mod diagnostics;
pub mod domain;
pub mod error;
pub mod evolution;
pub mod fractional;
pub mod output;
pub mod sweep;

pub use error::{FhksError, Result};
