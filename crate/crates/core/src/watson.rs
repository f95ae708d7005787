//! Watson's DCT-domain perceptual model.
//!
//! A mask `m(i, j, k)` is the largest change to coefficient `(i, j)` of block
//! `k` that stays below the visibility threshold. It starts from a
//! frequency-sensitivity table `t(i, j)`, is scaled by local luminance
//!
//! ```text
//! m = t(i, j) · (x(0, 0, k) / mean_k x(0, 0, k))^a_T
//! ```
//!
//! and optionally raised by contrast masking
//!
//! ```text
//! m' = max(m, |x(i, j, k)|^w · m^(1 − w)).
//! ```
//!
//! Luminance-only masks depend on a block's DC term alone, so they do not
//! change when an AC coefficient is watermarked. Contrast masks follow the
//! magnitude of the very coefficient being marked.

use alloc::vec::Vec;

use crate::blockdct::{Block, BlockSpectrum, ZigzagIndex, BLOCK_LEN};
use crate::{Error, Result};

/// Default luminance-masking exponent.
pub const DEFAULT_LUMINANCE_EXPONENT: f64 = 0.649;
/// Default contrast-masking exponent.
pub const DEFAULT_CONTRAST_EXPONENT: f64 = 0.7;
/// Floor applied to non-positive DC terms when flooring is requested.
pub const DC_FLOOR: f64 = 1e-6;

/// Frequency-sensitivity thresholds `t(i, j)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityTable([f64; BLOCK_LEN]);

impl SensitivityTable {
    /// The Peterson/Ahumada threshold table as tabulated by Cox, Miller and
    /// Bloom for Watson's model.
    #[allow(clippy::approx_constant)]
    pub const WATSON: [f64; BLOCK_LEN] = [
        1.40, 1.01, 1.16, 1.66, 2.40, 3.43, 4.79, 6.56, //
        1.01, 1.45, 1.32, 1.52, 2.00, 2.71, 3.67, 4.93, //
        1.16, 1.32, 2.24, 2.59, 2.98, 3.64, 4.60, 5.88, //
        1.66, 1.52, 2.59, 3.77, 4.55, 5.30, 6.28, 7.60, //
        2.40, 2.00, 2.98, 4.55, 6.15, 7.46, 8.71, 10.17, //
        3.43, 2.71, 3.64, 5.30, 7.46, 9.62, 11.58, 13.51, //
        4.79, 3.67, 4.60, 6.28, 8.71, 11.58, 14.50, 17.29, //
        6.56, 4.93, 5.88, 7.60, 10.17, 13.51, 17.29, 21.15,
    ];

    pub fn new(values: [f64; BLOCK_LEN]) -> Result<Self> {
        if let Some((index, &value)) =
            values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::NonPositiveMask { index, value });
        }
        Ok(Self(values))
    }

    pub fn watson() -> Self {
        Self(Self::WATSON)
    }

    pub fn get(&self, natural: usize) -> f64 {
        self.0[natural]
    }

    pub fn values(&self) -> &[f64; BLOCK_LEN] {
        &self.0
    }
}

impl Default for SensitivityTable {
    fn default() -> Self {
        Self::watson()
    }
}

/// Which perceptual functions contribute to the mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MaskMode {
    FrequencyLuminance,
    FrequencyLuminanceContrast,
}

impl MaskMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MaskMode::FrequencyLuminance => "freq-lum",
            MaskMode::FrequencyLuminanceContrast => "freq-lum-contrast",
        }
    }
}

impl core::fmt::Display for MaskMode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for MaskMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "freq-lum" | "frequency-luminance" => Ok(MaskMode::FrequencyLuminance),
            "freq-lum-contrast" | "frequency-luminance-contrast" => {
                Ok(MaskMode::FrequencyLuminanceContrast)
            }
            _ => Err(Error::param("mask_mode", alloc::format!("unknown mode `{s}`"))),
        }
    }
}

/// How to treat blocks whose DC coefficient is not positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DcPolicy {
    #[default]
    Reject,
    /// Replace `x(0,0,k)` by `max(x(0,0,k), DC_FLOOR)`.
    Floor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskParams {
    pub luminance_exponent: f64,
    pub contrast_exponent: f64,
    pub mode: MaskMode,
    pub dc_policy: DcPolicy,
}

impl MaskParams {
    pub fn new(mode: MaskMode) -> Self {
        Self {
            luminance_exponent: DEFAULT_LUMINANCE_EXPONENT,
            contrast_exponent: DEFAULT_CONTRAST_EXPONENT,
            mode,
            dc_policy: DcPolicy::Reject,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.luminance_exponent > 0.0 && self.luminance_exponent.is_finite()) {
            return Err(Error::param("luminance_exponent", "must be positive"));
        }
        if !(self.contrast_exponent > 0.0 && self.contrast_exponent < 1.0) {
            return Err(Error::param("contrast_exponent", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Per-block 8×8 thresholds `m(i, j, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskSet {
    masks: Vec<Block>,
}

impl MaskSet {
    pub fn blocks(&self) -> &[Block] {
        &self.masks
    }

    pub fn get(&self, k: usize, natural: usize) -> f64 {
        self.masks[k][natural]
    }

    pub fn extract(&self, index: ZigzagIndex) -> Vec<f64> {
        let n = index.natural();
        self.masks.iter().map(|b| b[n]).collect()
    }
}

/// Luminance-adapted threshold for one coefficient.
#[inline]
pub fn luminance_threshold(sensitivity: f64, dc: f64, dc_mean: f64, exponent: f64) -> f64 {
    sensitivity * libm::pow(dc / dc_mean, exponent)
}

/// Contrast-masked threshold for one coefficient of magnitude `|coeff|`.
#[inline]
pub fn contrast_threshold(luminance_mask: f64, coeff: f64, exponent: f64) -> f64 {
    let raised = libm::pow(libm::fabs(coeff), exponent) * libm::pow(luminance_mask, 1.0 - exponent);
    if raised > luminance_mask {
        raised
    } else {
        luminance_mask
    }
}

/// Applies `policy` to the DC terms, returning them with their mean.
pub fn checked_dc(dc: &[f64], policy: DcPolicy) -> Result<(Vec<f64>, f64)> {
    if dc.is_empty() {
        return Err(Error::Degenerate("no blocks"));
    }
    let mut out = Vec::with_capacity(dc.len());
    for (block, &d) in dc.iter().enumerate() {
        if d > 0.0 {
            out.push(d);
        } else {
            match policy {
                DcPolicy::Reject => return Err(Error::NonPositiveDc { block, dc: d }),
                DcPolicy::Floor => out.push(if d > DC_FLOOR { d } else { DC_FLOOR }),
            }
        }
    }
    let mean = crate::pairwise_mean(out.len(), |k| out[k]);
    Ok((out, mean))
}

pub fn luminance_mask(
    table: &SensitivityTable,
    spec: &BlockSpectrum,
    exponent: f64,
    policy: DcPolicy,
) -> Result<MaskSet> {
    let (dc, mean) = checked_dc(&spec.dc(), policy)?;
    let masks = dc
        .iter()
        .map(|&d| {
            let scale = libm::pow(d / mean, exponent);
            core::array::from_fn(|n| table.get(n) * scale)
        })
        .collect();
    Ok(MaskSet { masks })
}

pub fn contrast_mask(lum: &MaskSet, spec: &BlockSpectrum, exponent: f64) -> Result<MaskSet> {
    if lum.masks.len() != spec.block_count() {
        return Err(Error::LengthMismatch { expected: spec.block_count(), actual: lum.masks.len() });
    }
    let masks = lum
        .masks
        .iter()
        .zip(spec.blocks())
        .map(|(m, x)| core::array::from_fn(|n| contrast_threshold(m[n], x[n], exponent)))
        .collect();
    Ok(MaskSet { masks })
}

pub fn mask_set(table: &SensitivityTable, spec: &BlockSpectrum, params: &MaskParams) -> Result<MaskSet> {
    params.validate()?;
    let lum = luminance_mask(table, spec, params.luminance_exponent, params.dc_policy)?;
    match params.mode {
        MaskMode::FrequencyLuminance => Ok(lum),
        MaskMode::FrequencyLuminanceContrast => contrast_mask(&lum, spec, params.contrast_exponent),
    }
}

/// Thresholds `m_i` for the coefficient at `index` of every block.
pub fn mask_vector(
    table: &SensitivityTable,
    spec: &BlockSpectrum,
    index: ZigzagIndex,
    params: &MaskParams,
) -> Result<Vec<f64>> {
    params.validate()?;
    let (dc, mean) = checked_dc(&spec.dc(), params.dc_policy)?;
    let n = index.natural();
    let t = table.get(n);
    Ok(dc
        .iter()
        .zip(spec.blocks())
        .map(|(&d, b)| {
            let m = luminance_threshold(t, d, mean, params.luminance_exponent);
            match params.mode {
                MaskMode::FrequencyLuminance => m,
                MaskMode::FrequencyLuminanceContrast => {
                    contrast_threshold(m, b[n], params.contrast_exponent)
                }
            }
        })
        .collect())
}
