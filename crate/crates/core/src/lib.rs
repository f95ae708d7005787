//! Perceptually shaped spread-spectrum watermarking in the 8×8 block DCT domain.
//!
//! The crate covers the pure, allocation-only part of the toolkit:
//!
//! - [`blockdct`]: orthonormal 8×8 block transform and zigzag coefficient access,
//! - [`watson`]: Watson-model JND thresholds (frequency sensitivity, luminance
//!   and contrast masking),
//! - [`stats`]: Gaussian tails, GGD/Cauchy fitting and the closed-form
//!   double-sided miss probability,
//! - [`schemes`]: ASS, DS-ASS, DS-Cauchy and perceptual STDM embedders together
//!   with the correlator, GGD and Cauchy detectors,
//! - [`attacks`]: AWGN and transform-domain JPEG channels,
//! - [`roc`]: empirical thresholds and ROC points from Monte Carlo populations.
//!
//! Everything here is `no_std` (with `alloc`). File formats, the parallel
//! experiment engine and the command-line front end live in the `dswm-tools` crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod attacks;
pub mod blockdct;
mod error;
pub mod roc;
pub mod schemes;
pub mod stats;
mod sum;
pub mod watson;

pub use error::{Error, Result};
pub use sum::{pairwise_mean, pairwise_sum};

/// Stateless seed mixer (SplitMix64 finalizer over `seed + counter·φ`).
///
/// Used to derive independent per-trial and per-stream seeds from one master
/// seed so Monte Carlo trials can be evaluated in any order.
pub fn derive_seed(master: u64, counter: u64) -> u64 {
    let mut z = master.wrapping_add(counter.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::derive_seed;

    #[test]
    fn derived_seeds_differ() {
        let a: alloc::vec::Vec<u64> = (0..1000).map(|t| derive_seed(7, t)).collect();
        let mut b = a.clone();
        b.sort_unstable();
        b.dedup();
        assert_eq!(a.len(), b.len());
        assert_ne!(derive_seed(7, 0), derive_seed(8, 0));
    }
}
