//! Spatial and spectral grid types, the Frobenius norm, and the two on-disk
//! formats: binary PGM (P5, 8-bit) and RAWF64.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};

/// Real-valued 2-D pixel grid stored row-major.
///
/// Samples are intensities in nominal 0..=255 units but are not clamped;
/// quantization only happens in [`write_pgm`]. Every sample is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_shape(rows, cols, data.len())?;
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Result<Self> {
        Self::new(rows, cols, vec![value; rows * cols])
    }

    /// Builds an image by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self::new(rows, cols, data)
    }

    /// Unit impulse at `(row, col)`.
    pub fn delta(rows: usize, cols: usize, row: usize, col: usize) -> Result<Self> {
        let mut img = Self::zeros(rows, cols)?;
        let idx = (row % rows) * cols + col % cols;
        img.data[idx] = 1.0;
        Ok(img)
    }

    /// Internal constructor for results of arithmetic on already-valid data.
    pub(crate) fn from_parts(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        debug_assert!(data.iter().all(|v| v.is_finite()), "non-finite sample produced");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, factor: f64) -> Image {
        Image::from_parts(self.rows, self.cols, self.data.iter().map(|v| v * factor).collect())
    }

    /// Pointwise `self - other`.
    pub fn sub(&self, other: &Image) -> Result<Image> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise `self + other`.
    pub fn add(&self, other: &Image) -> Result<Image> {
        self.zip_with(other, |a, b| a + b)
    }

    /// Largest pointwise absolute difference.
    pub fn max_abs_diff(&self, other: &Image) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    fn zip_with(&self, other: &Image, f: impl Fn(f64, f64) -> f64) -> Result<Image> {
        ensure_same_dims(self.dims(), other.dims())?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Image::from_parts(self.rows, self.cols, data))
    }
}

/// Complex 2-D grid holding a forward-unscaled DFT (see [`crate::fourier`]).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        check_shape(rows, cols, data.len())?;
        if let Some(index) = data.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![Complex64::new(0.0, 0.0); rows * cols])
    }

    pub(crate) fn from_parts(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.cols + col]
    }

    /// Pointwise magnitudes `|F(u,v)|`, row-major.
    pub fn magnitudes(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.norm()).collect()
    }
}

fn check_shape(rows: usize, cols: usize, len: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyImage { rows, cols });
    }
    if rows.checked_mul(cols) != Some(len) {
        return Err(Error::LengthMismatch { rows, cols, len });
    }
    Ok(())
}

pub(crate) fn ensure_same_dims(a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(Error::mismatch(a, b));
    }
    Ok(())
}

/// `sqrt(sum of squared samples)`.
pub fn frobenius_norm(img: &Image) -> f64 {
    img.data.iter().map(|v| v * v).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------------------
// PGM (P5)
// ---------------------------------------------------------------------------

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c => self.pos += 1,
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn read_uint(&mut self, what: &str) -> Result<u32> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::PgmHeader(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::PgmHeader(format!("{what} out of range")))
    }
}

/// Decodes a binary 8-bit PGM. Samples keep their integer values; no
/// rescaling by maxval is applied.
pub fn read_pgm(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::PgmHeader("missing P5 magic".into()));
    }
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let cols = cur.read_uint("width")? as usize;
    let rows = cur.read_uint("height")? as usize;
    let maxval = cur.read_uint("maxval")?;
    if rows == 0 || cols == 0 {
        return Err(Error::PgmHeader(format!("zero dimension {cols}x{rows}")));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::PgmMaxval(maxval));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(Error::PgmHeader("missing whitespace after maxval".into())),
    }
    let expected = rows * cols;
    let body = &bytes[cur.pos..];
    if body.len() < expected {
        return Err(Error::PgmTruncated { expected, found: body.len() });
    }
    let data = body[..expected].iter().map(|&b| f64::from(b)).collect();
    Ok(Image::from_parts(rows, cols, data))
}

/// Quantizes one sample: clamp to [0, 255], then round half away from zero.
pub fn quantize_sample(v: f64) -> u8 {
    v.clamp(0.0, 255.0).round() as u8
}

/// Encodes as binary PGM with the canonical header `P5\n<cols> <rows>\n255\n`.
pub fn write_pgm(img: &Image) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.cols, img.rows);
    let mut out = Vec::with_capacity(header.len() + img.len());
    out.extend_from_slice(header.as_bytes());
    out.extend(img.data.iter().map(|&v| quantize_sample(v)));
    out
}

// ---------------------------------------------------------------------------
// RAWF64
// ---------------------------------------------------------------------------

const RAW_MAGIC: &str = "RAWF64";

/// Header `RAWF64 <rows> <cols>\n` followed by little-endian f64 samples.
pub fn write_raw(img: &Image) -> Vec<u8> {
    let header = format!("{RAW_MAGIC} {} {}\n", img.rows, img.cols);
    let mut out = Vec::with_capacity(header.len() + 8 * img.len());
    out.extend_from_slice(header.as_bytes());
    for v in &img.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn read_raw(bytes: &[u8]) -> Result<Image> {
    let nl = bytes.iter().position(|&b| b == b'\n').ok_or(Error::RawMagic)?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| Error::RawMagic)?;
    let mut fields = header.split(' ');
    if fields.next() != Some(RAW_MAGIC) {
        return Err(Error::RawMagic);
    }
    let mut dim = || -> Result<usize> {
        fields.next().and_then(|s| s.parse().ok()).ok_or(Error::RawMagic)
    };
    let rows = dim()?;
    let cols = dim()?;
    if fields.next().is_some() {
        return Err(Error::RawMagic);
    }
    let body = &bytes[nl + 1..];
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or(Error::RawMagic)?;
    if body.len() != expected {
        return Err(Error::RawSize { expected, found: body.len() });
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Image::new(rows, cols, data)
}
