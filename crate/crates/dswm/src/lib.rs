//! Image IO, the Monte Carlo ROC engine and the command-line front end for
//! the `dswm_core` watermarking primitives.
//!
//! - [`pgm`]: binary 8-bit PGM reader/writer,
//! - [`tables`]: 8×8 sensitivity and quantization tables from text files,
//! - [`sidecar`]: `key=value` metadata that travels with a watermarked image,
//! - [`protocol`]: single-image estimate, embed and detect,
//! - [`harness`]: permutation trials, empirical ROC curves, CSV export and
//!   the closed-form check.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod pgm;
pub mod protocol;
pub mod sidecar;
pub mod tables;

pub use dswm_core;
pub use error::{Error, Result};
