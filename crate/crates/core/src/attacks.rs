//! Attack channels: additive white Gaussian noise on pixels and JPEG-style
//! coefficient quantization (no entropy coding).

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::blockdct::{to_pixel, Block, Dct8, Image, BLOCK_LEN};
use crate::{Error, Result};

/// Luminance quantization table from Annex K of the JPEG standard, row-major.
pub const JPEG_LUMINANCE: [u16; BLOCK_LEN] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantTable([u16; BLOCK_LEN]);

impl QuantTable {
    pub fn new(steps: [u16; BLOCK_LEN]) -> Result<Self> {
        if let Some(index) = steps.iter().position(|&s| s == 0) {
            return Err(Error::param("quant_table", alloc::format!("entry {index} is zero")));
        }
        Ok(Self(steps))
    }

    pub fn jpeg_luminance() -> Self {
        Self(JPEG_LUMINANCE)
    }

    pub fn values(&self) -> &[u16; BLOCK_LEN] {
        &self.0
    }

    /// Steps for quality factor `quality` using the IJG scaling convention.
    pub fn scaled(&self, quality: u8) -> Result<[u16; BLOCK_LEN]> {
        let scale = f64::from(quality_scale(quality)?);
        Ok(core::array::from_fn(|n| {
            libm::round(f64::from(self.0[n]) * scale / 100.0).clamp(1.0, 255.0) as u16
        }))
    }
}

impl Default for QuantTable {
    fn default() -> Self {
        Self::jpeg_luminance()
    }
}

/// Percentage applied to the base table: `5000/QF` below 50, `200 − 2·QF` otherwise.
pub fn quality_scale(quality: u8) -> Result<u32> {
    if !(1..=100).contains(&quality) {
        return Err(Error::param("quality", alloc::format!("{quality} is outside 1..=100")));
    }
    let q = u32::from(quality);
    Ok(if q < 50 { 5000 / q } else { 200 - 2 * q })
}

/// Rounds every coefficient to the nearest multiple of its step.
pub fn quantize_block(coeffs: &Block, steps: &[u16; BLOCK_LEN]) -> Block {
    core::array::from_fn(|n| {
        let q = f64::from(steps[n]);
        libm::round(coeffs[n] / q) * q
    })
}

/// Pixel block through forward DCT, quantization, inverse DCT and 8-bit rounding.
pub fn jpeg_block(dct: &Dct8, samples: &Block, steps: &[u16; BLOCK_LEN]) -> Block {
    let rec = dct.inverse(&quantize_block(&dct.forward(samples), steps));
    core::array::from_fn(|n| f64::from(to_pixel(rec[n])))
}

pub fn attack_jpeg(img: &Image, quality: u8) -> Result<Image> {
    attack_jpeg_with(img, &QuantTable::jpeg_luminance(), quality)
}

pub fn attack_jpeg_with(img: &Image, table: &QuantTable, quality: u8) -> Result<Image> {
    let steps = table.scaled(quality)?;
    let dct = Dct8::new();
    let mut out = img.clone();
    for k in 0..img.block_count() {
        out.set_block(k, &jpeg_block(&dct, &img.block(k), &steps));
    }
    Ok(out)
}

/// Adds `sigma · N(0, 1)` to each sample.
pub fn add_noise<R: Rng + ?Sized>(samples: &mut [f64], sigma: f64, rng: &mut R) {
    for s in samples {
        *s += sigma * rng.sample::<f64, _>(StandardNormal);
    }
}

/// Pixel-domain AWGN with standard deviation `sigma`, rounded and clamped.
pub fn attack_awgn(img: &Image, sigma: f64, seed: u64) -> Result<Image> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::param("sigma", "noise standard deviation must be non-negative"));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pixels: Vec<u8> = img
        .pixels()
        .iter()
        .map(|&p| to_pixel(f64::from(p) + sigma * rng.sample::<f64, _>(StandardNormal)))
        .collect();
    Image::new(img.width(), img.height(), pixels)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Attack {
    None,
    /// Zero-mean Gaussian noise with this standard deviation.
    Awgn { sigma: f64 },
    /// JPEG-style quantization at this quality factor.
    Jpeg { quality: u8 },
}

impl Attack {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Attack::None => Ok(()),
            Attack::Awgn { sigma } if sigma >= 0.0 && sigma.is_finite() => Ok(()),
            Attack::Awgn { .. } => Err(Error::param("sigma", "must be non-negative")),
            Attack::Jpeg { quality } => quality_scale(quality).map(|_| ()),
        }
    }

    pub fn apply(&self, img: &Image, seed: u64) -> Result<Image> {
        match *self {
            Attack::None => Ok(img.clone()),
            Attack::Awgn { sigma } => attack_awgn(img, sigma, seed),
            Attack::Jpeg { quality } => attack_jpeg(img, quality),
        }
    }
}

impl core::fmt::Display for Attack {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match *self {
            Attack::None => f.write_str("none"),
            Attack::Awgn { sigma } => write!(f, "awgn:{sigma}"),
            Attack::Jpeg { quality } => write!(f, "jpeg:{quality}"),
        }
    }
}

impl core::str::FromStr for Attack {
    type Err = Error;

    /// `none`, `awgn:<sigma>` or `jpeg:<quality>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::param("attack", alloc::format!("cannot parse `{s}`"));
        let attack = match s.split_once(':') {
            None if s == "none" => Attack::None,
            Some(("awgn", v)) => Attack::Awgn { sigma: v.parse().map_err(|_| bad())? },
            Some(("jpeg", v)) => Attack::Jpeg { quality: v.parse().map_err(|_| bad())? },
            _ => return Err(bad()),
        };
        attack.validate()?;
        Ok(attack)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockdct::block_dct;
    use alloc::string::ToString;

    fn ramp(w: usize, h: usize) -> Image {
        let px = (0..w * h).map(|i| (30 + (i % w) * 3 + (i / w) * 2) as u8).collect();
        Image::new(w, h, px).unwrap()
    }

    #[test]
    fn quality_fifty_is_the_base_table() {
        assert_eq!(quality_scale(50).unwrap(), 100);
        let steps = QuantTable::jpeg_luminance().scaled(50).unwrap();
        assert_eq!(steps, JPEG_LUMINANCE);
        assert_eq!(steps[0], 16);
        let mut b = [0.0; 64];
        b[0] = 100.0;
        assert_eq!(quantize_block(&b, &steps)[0], 96.0);
    }

    #[test]
    fn quality_scaling_convention() {
        assert_eq!(quality_scale(10).unwrap(), 500);
        assert_eq!(quality_scale(75).unwrap(), 50);
        assert!(quality_scale(0).is_err());
        assert!(quality_scale(101).is_err());
        assert!(QuantTable::jpeg_luminance().scaled(100).unwrap().iter().all(|&s| s == 1));
        let q10 = QuantTable::jpeg_luminance().scaled(10).unwrap();
        assert_eq!(q10[0], 80);
        assert_eq!(q10[63], 255);
        assert!(QuantTable::new([0; 64]).is_err());
    }

    #[test]
    fn quality_hundred_is_nearly_lossless() {
        let img = ramp(32, 32);
        let out = attack_jpeg(&img, 100).unwrap();
        let max_diff = img.pixels().iter().zip(out.pixels()).map(|(a, b)| a.abs_diff(*b)).max().unwrap();
        assert!(max_diff <= 1, "{max_diff}");
    }

    #[test]
    fn jpeg_coefficients_are_step_multiples_before_inverse() {
        let img = ramp(16, 16);
        let steps = QuantTable::jpeg_luminance().scaled(50).unwrap();
        let spec = block_dct(&img);
        for b in spec.blocks() {
            let q = quantize_block(b, &steps);
            for n in 0..64 {
                let r = q[n] / f64::from(steps[n]);
                assert_eq!(r, r.round());
            }
        }
    }

    #[test]
    fn jpeg_reattack_moves_coefficients_by_at_most_one_step() {
        let px: Vec<u8> = (0..64 * 64).map(|i| ((i * 7 + (i / 64) * 29) % 256) as u8).collect();
        let img = Image::new(64, 64, px).unwrap();
        let steps = QuantTable::jpeg_luminance().scaled(50).unwrap();
        let once = block_dct(&attack_jpeg(&img, 50).unwrap());
        let twice = block_dct(&attack_jpeg(&attack_jpeg(&img, 50).unwrap(), 50).unwrap());
        for (a, b) in once.blocks().iter().zip(twice.blocks()) {
            let qa = quantize_block(a, &steps);
            let qb = quantize_block(b, &steps);
            for n in 0..64 {
                assert!((qa[n] - qb[n]).abs() <= f64::from(steps[n]) + 1e-9);
            }
        }
    }

    #[test]
    fn awgn_zero_sigma_is_identity() {
        let img = ramp(16, 16);
        assert_eq!(attack_awgn(&img, 0.0, 3).unwrap(), img);
        assert!(attack_awgn(&img, -1.0, 3).is_err());
    }

    #[test]
    fn awgn_variance_and_determinism() {
        let img = Image::filled(512, 512, 128).unwrap();
        let a = attack_awgn(&img, 5.0, 42).unwrap();
        assert_eq!(a, attack_awgn(&img, 5.0, 42).unwrap());
        assert_ne!(a, attack_awgn(&img, 5.0, 43).unwrap());
        let n = a.pixels().len() as f64;
        let diffs: Vec<f64> = a.pixels().iter().map(|&p| f64::from(p) - 128.0).collect();
        let mean = diffs.iter().sum::<f64>() / n;
        let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1.0);
        // rounding adds ~1/12
        assert!((var - 25.0).abs() < 0.05 * 25.0, "{var}");
    }

    #[test]
    fn attack_spec_parsing() {
        assert_eq!("none".parse::<Attack>().unwrap(), Attack::None);
        assert_eq!("awgn:5".parse::<Attack>().unwrap(), Attack::Awgn { sigma: 5.0 });
        assert_eq!("jpeg:50".parse::<Attack>().unwrap(), Attack::Jpeg { quality: 50 });
        assert!("jpeg:0".parse::<Attack>().is_err());
        assert!("blur:3".parse::<Attack>().is_err());
        assert_eq!(Attack::Awgn { sigma: 5.0 }.to_string(), "awgn:5");
        let img = ramp(8, 8);
        assert_eq!(Attack::None.apply(&img, 0).unwrap(), img);
    }
}
