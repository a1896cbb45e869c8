//! Skew-elliptical distributions, parameter conditions for stochastic orders
//! between them, matrix cone membership tests and Monte-Carlo checks.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cones;
pub mod error;
pub mod linalg;
pub mod mc;
pub mod model;
pub mod orders;
pub mod quad;
pub mod sampler;
pub mod special;

pub use error::{Error, Result};
pub use model::{GeneratorConstants, GeneratorKind, RawParams, SkewEllipticalParams};
pub use nalgebra;
