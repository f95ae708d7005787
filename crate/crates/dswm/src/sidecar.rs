//! `key=value` metadata written next to a watermarked image.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use dswm_core::blockdct::ZigzagIndex;
use dswm_core::schemes::Scheme;
use dswm_core::watson::MaskMode;

use crate::error::{Error, Result};

const KEYS: [&str; 6] = ["seed", "scheme", "a", "N", "mask_mode", "zigzag_index"];

/// Everything the detector needs to rebuild the coefficient selection and
/// the watermark.
#[derive(Debug, Clone, PartialEq)]
pub struct Sidecar {
    pub seed: u64,
    pub scheme: Scheme,
    pub a: f64,
    pub n: usize,
    pub mask_mode: MaskMode,
    pub zigzag_index: ZigzagIndex,
}

impl fmt::Display for Sidecar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seed={}", self.seed)?;
        writeln!(f, "scheme={}", self.scheme)?;
        writeln!(f, "a={}", self.a)?;
        writeln!(f, "N={}", self.n)?;
        writeln!(f, "mask_mode={}", self.mask_mode)?;
        writeln!(f, "zigzag_index={}", self.zigzag_index.position())
    }
}

impl FromStr for Sidecar {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut map = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Sidecar(format!("line {}: expected key=value", lineno + 1)))?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(Error::Sidecar(format!("unknown key `{k}`")));
            }
            if map.insert(k, v.trim()).is_some() {
                return Err(Error::Sidecar(format!("duplicate key `{k}`")));
            }
        }
        let get = |k: &str| map.get(k).copied().ok_or_else(|| Error::Sidecar(format!("missing key `{k}`")));
        let bad = |k: &str, v: &str| Error::Sidecar(format!("bad value for `{k}`: `{v}`"));

        let seed = get("seed")?;
        let a = get("a")?;
        let n = get("N")?;
        let idx = get("zigzag_index")?;
        let sidecar = Sidecar {
            seed: seed.parse().map_err(|_| bad("seed", seed))?,
            scheme: get("scheme")?.parse()?,
            a: a.parse().map_err(|_| bad("a", a))?,
            n: n.parse().map_err(|_| bad("N", n))?,
            mask_mode: get("mask_mode")?.parse()?,
            zigzag_index: ZigzagIndex::new(idx.parse().map_err(|_| bad("zigzag_index", idx))?)?,
        };
        if !(sidecar.a >= 0.0 && sidecar.a.is_finite()) {
            return Err(bad("a", a));
        }
        Ok(sidecar)
    }
}

impl Sidecar {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?.parse()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_string()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Sidecar {
        Sidecar {
            seed: 42,
            scheme: Scheme::DsCauchy,
            a: 0.3,
            n: 2000,
            mask_mode: MaskMode::FrequencyLuminanceContrast,
            zigzag_index: ZigzagIndex::new(5).unwrap(),
        }
    }

    #[test]
    fn round_trip() {
        let s = sample();
        let text = s.to_string();
        assert!(text.contains("N=2000\n"));
        assert!(text.contains("scheme=DS-Cauchy\n"));
        assert_eq!(text.parse::<Sidecar>().unwrap(), s);
    }

    #[test]
    fn corrupt_files() {
        let text = sample().to_string();
        assert!(text.replace("seed=42", "seed=-1").parse::<Sidecar>().is_err());
        assert!(text.replace("a=0.3", "a=nan").parse::<Sidecar>().is_err());
        assert!(text.replace("zigzag_index=5", "zigzag_index=65").parse::<Sidecar>().is_err());
        assert!(text.replace("N=2000\n", "").parse::<Sidecar>().is_err());
        assert!(format!("{text}seed=1\n").parse::<Sidecar>().is_err());
        assert!(format!("{text}colour=red\n").parse::<Sidecar>().is_err());
        assert!(format!("{text}garbage\n").parse::<Sidecar>().is_err());
        assert!(format!("# comment\n{text}").parse::<Sidecar>().is_ok());
    }
}
