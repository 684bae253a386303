//! Mass-conserving Allen–Cahn dynamics with a local/nonlocal Lagrange
//! multiplier, a front-tracking reference for volume-preserving curvature
//! flow, and the tools that compare the two through the inner asymptotic
//! expansion of the layer.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod config;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod fronttrack;
pub mod geometry;
pub mod grid;
pub mod potential;
pub mod profile1d;

pub use error::{Error, Result};
