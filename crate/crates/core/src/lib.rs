//! Exact transition kernels of circulant random walks on discrete tori,
//! the limit densities they converge to, and the tooling to compare them.

// `!(x > 0.0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod fft;
pub mod kernel;
pub mod limits;
pub mod montecarlo;
pub mod profile;
pub mod quad;
pub mod torus;

pub use error::{Error, Result};
