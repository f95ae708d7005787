//! Plain-text 8×8 tables: 8 rows of 8 whitespace-separated numbers.
//! Blank lines and `#` comments are ignored.

use std::path::Path;

use dswm_core::attacks::QuantTable;
use dswm_core::blockdct::BLOCK_LEN;
use dswm_core::watson::SensitivityTable;

use crate::error::{Error, Result};

fn parse_grid<T>(text: &str) -> Result<[T; BLOCK_LEN]>
where
    T: std::str::FromStr + Copy + Default,
{
    let mut out = [T::default(); BLOCK_LEN];
    let mut row = 0;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |reason: String| Error::Table { line: lineno + 1, reason };
        if row == 8 {
            return Err(err("more than 8 rows".into()));
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 8 {
            return Err(err(format!("expected 8 values, found {}", fields.len())));
        }
        for (col, f) in fields.iter().enumerate() {
            out[row * 8 + col] = f.parse().map_err(|_| err(format!("cannot parse `{f}`")))?;
        }
        row += 1;
    }
    if row != 8 {
        return Err(Error::Table { line: text.lines().count(), reason: format!("expected 8 rows, found {row}") });
    }
    Ok(out)
}

pub fn parse_sensitivity_table(text: &str) -> Result<SensitivityTable> {
    Ok(SensitivityTable::new(parse_grid::<f64>(text)?)?)
}

pub fn parse_quant_table(text: &str) -> Result<QuantTable> {
    Ok(QuantTable::new(parse_grid::<u16>(text)?)?)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn load_sensitivity_table(path: impl AsRef<Path>) -> Result<SensitivityTable> {
    parse_sensitivity_table(&read(path.as_ref())?)
}

pub fn load_quant_table(path: impl AsRef<Path>) -> Result<QuantTable> {
    parse_quant_table(&read(path.as_ref())?)
}
