//! Exact and Monte Carlo analysis of a lazy random walk on `{1, ..., d}`
//! killed when it leaves the segment.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;

pub mod bounds;
pub mod combinatorics;
pub mod error;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod samplers;
pub mod semigroup;
pub mod spectral;
pub mod variance;
mod trig;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use model::{Kernel, KernelKind, Measure, Model};
