use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("image dimensions {width}x{height} are not multiples of 8")]
    NotBlockAligned { width: usize, height: usize },

    #[error("pixel buffer holds {actual} samples, expected {expected}")]
    PixelCount { expected: usize, actual: usize },

    #[error("zigzag position {0} is outside 1..=64")]
    ZigzagOutOfRange(usize),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("block {block} has non-positive DC coefficient {dc}")]
    NonPositiveDc { block: usize, dc: f64 },

    #[error("mask entry {index} is not positive ({value})")]
    NonPositiveMask { index: usize, value: f64 },

    #[error("watermark length {0} must be even and at least 2")]
    WatermarkLength(usize),

    #[error("watermark entry {index} is {value}, expected +1 or -1")]
    WatermarkEntry { index: usize, value: i8 },

    #[error("watermark does not sum to zero (sum {0})")]
    WatermarkSum(i64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate data: {0}")]
    Degenerate(&'static str),

    #[error("abs/rms ratio {0} is outside the range reachable by a GGD with shape in [0.1, 5]")]
    ShapeOutOfRange(f64),

    #[error("false-alarm target {p_fa} is finer than the 1/{trials} resolution of the population")]
    Resolution { p_fa: f64, trials: usize },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
