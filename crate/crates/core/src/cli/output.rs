use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::Value;

use crate::image::{write_pgm, write_raw, Image};

/// Shortest round-trip scientific notation, e.g. `1e-7`, `8.49e-2`.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Writes a header row and data rows: comma separated, LF terminated.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub(crate) fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub(crate) fn save_pgm(path: &Path, img: &Image) -> Result<()> {
    fs::write(path, write_pgm(img)).with_context(|| format!("writing {}", path.display()))
}

pub(crate) fn save_raw(path: &Path, img: &Image) -> Result<()> {
    fs::write(path, write_raw(img)).with_context(|| format!("writing {}", path.display()))
}
