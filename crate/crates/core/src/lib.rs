//! Universal dual extrapolation (UnderGrad) for constrained convex
//! minimization, with the baselines, test problems and experiment harness
//! needed to reproduce its convergence behaviour.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod analysis;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod oracle;
pub mod par;
pub mod problems;
pub mod symlinalg;

pub use error::{Error, Result};
