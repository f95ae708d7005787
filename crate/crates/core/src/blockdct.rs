//! 8-bit grayscale images, the orthonormal 8×8 type-II block DCT and zigzag
//! access to one coefficient per block.
//!
//! Coefficients are addressed as `(i, j)` with `i` the vertical and `j` the
//! horizontal frequency, stored row-major (`i * 8 + j`) inside a [`Block`].

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::{Error, Result};

pub const BLOCK: usize = 8;
pub const BLOCK_LEN: usize = BLOCK * BLOCK;

/// One 8×8 block of samples or coefficients, row-major.
pub type Block = [f64; BLOCK_LEN];

/// Natural (row-major) index of each JPEG zigzag scan position, position 1 first.
pub const ZIGZAG_TO_NATURAL: [usize; BLOCK_LEN] = [
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5, 12, 19, 26, 33, 40, 48, 41, 34, 27,
    20, 13, 6, 7, 14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51, 58,
    59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Image {
    /// Wraps a row-major luminance buffer. Both dimensions must be multiples of 8.
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || width % BLOCK != 0 || height % BLOCK != 0 {
            return Err(Error::NotBlockAligned { width, height });
        }
        if pixels.len() != width * height {
            return Err(Error::PixelCount { expected: width * height, actual: pixels.len() });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn blocks_wide(&self) -> usize {
        self.width / BLOCK
    }

    pub fn blocks_high(&self) -> usize {
        self.height / BLOCK
    }

    pub fn block_count(&self) -> usize {
        self.blocks_wide() * self.blocks_high()
    }

    /// Pixels of block `k` (blocks numbered row-major) as floats.
    pub fn block(&self, k: usize) -> Block {
        let (by, bx) = (k / self.blocks_wide(), k % self.blocks_wide());
        let mut out = [0.0; BLOCK_LEN];
        for y in 0..BLOCK {
            let row = (by * BLOCK + y) * self.width + bx * BLOCK;
            for x in 0..BLOCK {
                out[y * BLOCK + x] = f64::from(self.pixels[row + x]);
            }
        }
        out
    }

    /// Writes `samples` into block `k`, rounding and clamping each to 0..=255.
    pub fn set_block(&mut self, k: usize, samples: &Block) {
        let (by, bx) = (k / self.blocks_wide(), k % self.blocks_wide());
        for y in 0..BLOCK {
            let row = (by * BLOCK + y) * self.width + bx * BLOCK;
            for x in 0..BLOCK {
                self.pixels[row + x] = to_pixel(samples[y * BLOCK + x]);
            }
        }
    }

    /// Mean squared error against another image of the same size.
    pub fn mse(&self, other: &Image) -> Result<f64> {
        if self.pixels.len() != other.pixels.len() {
            return Err(Error::LengthMismatch {
                expected: self.pixels.len(),
                actual: other.pixels.len(),
            });
        }
        let n = self.pixels.len();
        Ok(crate::pairwise_mean(n, |i| {
            let d = f64::from(self.pixels[i]) - f64::from(other.pixels[i]);
            d * d
        }))
    }

    /// Peak signal-to-noise ratio in dB; infinite for identical images.
    pub fn psnr(&self, other: &Image) -> Result<f64> {
        let mse = self.mse(other)?;
        if mse == 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(10.0 * libm::log10(255.0 * 255.0 / mse))
    }
}

/// Rounds half away from zero and clamps to the 8-bit range.
pub fn to_pixel(v: f64) -> u8 {
    let r = libm::round(v);
    if r <= 0.0 {
        0
    } else if r >= 255.0 {
        255
    } else {
        r as u8
    }
}

/// Separable orthonormal 8-point DCT-II kernel.
#[derive(Debug, Clone)]
pub struct Dct8 {
    // basis[u][n] = alpha(u) cos((2n + 1) u pi / 16)
    basis: [[f64; BLOCK]; BLOCK],
}

impl Default for Dct8 {
    fn default() -> Self {
        Self::new()
    }
}

impl Dct8 {
    pub fn new() -> Self {
        let mut basis = [[0.0; BLOCK]; BLOCK];
        for (u, row) in basis.iter_mut().enumerate() {
            let alpha = if u == 0 { libm::sqrt(1.0 / 8.0) } else { 0.5 };
            for (n, c) in row.iter_mut().enumerate() {
                *c = alpha * libm::cos((2 * n + 1) as f64 * u as f64 * PI / 16.0);
            }
        }
        Self { basis }
    }

    pub fn forward(&self, samples: &Block) -> Block {
        // rows, then columns
        let mut tmp = [0.0; BLOCK_LEN];
        for y in 0..BLOCK {
            for v in 0..BLOCK {
                let mut acc = 0.0;
                for x in 0..BLOCK {
                    acc += self.basis[v][x] * samples[y * BLOCK + x];
                }
                tmp[y * BLOCK + v] = acc;
            }
        }
        let mut out = [0.0; BLOCK_LEN];
        for u in 0..BLOCK {
            for v in 0..BLOCK {
                let mut acc = 0.0;
                for y in 0..BLOCK {
                    acc += self.basis[u][y] * tmp[y * BLOCK + v];
                }
                out[u * BLOCK + v] = acc;
            }
        }
        out
    }

    pub fn inverse(&self, coeffs: &Block) -> Block {
        let mut tmp = [0.0; BLOCK_LEN];
        for u in 0..BLOCK {
            for x in 0..BLOCK {
                let mut acc = 0.0;
                for v in 0..BLOCK {
                    acc += self.basis[v][x] * coeffs[u * BLOCK + v];
                }
                tmp[u * BLOCK + x] = acc;
            }
        }
        let mut out = [0.0; BLOCK_LEN];
        for y in 0..BLOCK {
            for x in 0..BLOCK {
                let mut acc = 0.0;
                for u in 0..BLOCK {
                    acc += self.basis[u][y] * tmp[u * BLOCK + x];
                }
                out[y * BLOCK + x] = acc;
            }
        }
        out
    }

    /// Pixel-domain image of the unit coefficient at natural index `natural`.
    ///
    /// Because the transform is orthonormal, coefficient `(i, j)` of any block
    /// equals its inner product with this basis image.
    pub fn basis_image(&self, natural: usize) -> Block {
        let (u, v) = (natural / BLOCK, natural % BLOCK);
        let mut out = [0.0; BLOCK_LEN];
        for y in 0..BLOCK {
            for x in 0..BLOCK {
                out[y * BLOCK + x] = self.basis[u][y] * self.basis[v][x];
            }
        }
        out
    }
}

/// Per-block DCT coefficients of an image.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSpectrum {
    blocks_wide: usize,
    blocks_high: usize,
    blocks: Vec<Block>,
}

impl BlockSpectrum {
    pub fn new(blocks_wide: usize, blocks_high: usize, blocks: Vec<Block>) -> Result<Self> {
        if blocks.len() != blocks_wide * blocks_high {
            return Err(Error::LengthMismatch {
                expected: blocks_wide * blocks_high,
                actual: blocks.len(),
            });
        }
        if blocks.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Degenerate("spectrum contains non-finite coefficients"));
        }
        Ok(Self { blocks_wide, blocks_high, blocks })
    }

    pub fn blocks_wide(&self) -> usize {
        self.blocks_wide
    }

    pub fn blocks_high(&self) -> usize {
        self.blocks_high
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [Block] {
        &mut self.blocks
    }

    /// `x(i, j, k)`.
    pub fn coefficient(&self, k: usize, i: usize, j: usize) -> f64 {
        self.blocks[k][i * BLOCK + j]
    }

    /// DC coefficients `x(0, 0, k)` of every block.
    pub fn dc(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b[0]).collect()
    }
}

pub fn block_dct(img: &Image) -> BlockSpectrum {
    let dct = Dct8::new();
    let blocks = (0..img.block_count()).map(|k| dct.forward(&img.block(k))).collect();
    BlockSpectrum { blocks_wide: img.blocks_wide(), blocks_high: img.blocks_high(), blocks }
}

/// Inverse transform with round-half-away-from-zero and clamping to 0..=255.
pub fn block_idct(spec: &BlockSpectrum) -> Image {
    let dct = Dct8::new();
    let width = spec.blocks_wide * BLOCK;
    let height = spec.blocks_high * BLOCK;
    let mut img = Image { width, height, pixels: vec![0; width * height] };
    for (k, coeffs) in spec.blocks.iter().enumerate() {
        img.set_block(k, &dct.inverse(coeffs));
    }
    img
}

/// Position in the JPEG zigzag scan, counted from 1 (the DC term).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ZigzagIndex(u8);

impl ZigzagIndex {
    pub const DC: ZigzagIndex = ZigzagIndex(1);

    pub fn new(position: usize) -> Result<Self> {
        if (1..=BLOCK_LEN).contains(&position) {
            Ok(Self(position as u8))
        } else {
            Err(Error::ZigzagOutOfRange(position))
        }
    }

    pub fn position(self) -> usize {
        usize::from(self.0)
    }

    /// Row-major index inside a [`Block`].
    pub fn natural(self) -> usize {
        ZIGZAG_TO_NATURAL[usize::from(self.0) - 1]
    }

    /// `(i, j)`: vertical and horizontal frequency.
    pub fn row_col(self) -> (usize, usize) {
        let n = self.natural();
        (n / BLOCK, n % BLOCK)
    }
}

impl core::fmt::Display for ZigzagIndex {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One coefficient per block, in block order.
pub fn zigzag_extract(spec: &BlockSpectrum, index: ZigzagIndex) -> Vec<f64> {
    let n = index.natural();
    spec.blocks.iter().map(|b| b[n]).collect()
}

/// Overwrites the `index` coefficient of every block with `values`.
pub fn zigzag_insert(spec: &mut BlockSpectrum, index: ZigzagIndex, values: &[f64]) -> Result<()> {
    if values.len() != spec.blocks.len() {
        return Err(Error::LengthMismatch { expected: spec.blocks.len(), actual: values.len() });
    }
    let n = index.natural();
    for (b, &v) in spec.blocks.iter_mut().zip(values) {
        b[n] = v;
    }
    Ok(())
}
