//! Radar open-space segmentation core.
//!
//! Everything here is pure computation over in-memory buffers: the FMCW
//! frame simulator, the cube processing chain (SCA → RDA → RA → DoA), a
//! small reverse-mode network substrate, the three segmentation
//! architectures and the segmentation metrics. File formats, dataset
//! management and the command-line front end live in the `radar-openspace`
//! crate.
//!
//! The crate builds without `std` (it needs `alloc`). The default `std`
//! feature switches float math and the GEMM kernel to their std backends
//! and adds the wall-clock FPS benchmark.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub mod eval;
pub mod models;
pub mod nn;
pub mod numerics;
pub mod pipeline;
pub mod simulate;

pub use error::{Error, Result};
pub use numerics::{Complex, DType, Real, Tensor};
