//! Degradation model: uniform-disk defocus PSF, periodic blur, and additive
//! white Gaussian noise at a prescribed SNR.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{circular_convolve, circular_shift};
use crate::image::{ensure_same_dims, frobenius_norm, Image};

/// Blur kernel in origin-centered wraparound layout, ready for `dft2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Psf {
    image: Image,
    /// Disk radius in pixels; `None` for kernels supplied directly.
    radius: Option<f64>,
    /// Geometric center used while building the disk.
    center: Option<(usize, usize)>,
}

impl Psf {
    /// Wraps an arbitrary kernel already laid out with its center at (0, 0).
    /// The samples must sum to one.
    pub fn from_kernel(image: Image) -> Result<Self> {
        let sum = image.sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("PSF samples sum to {sum}, expected 1")));
        }
        Ok(Self { image, radius: None, center: None })
    }

    pub fn image(&self) -> &Image {
        &self.image
    }

    pub fn radius(&self) -> Option<f64> {
        self.radius
    }

    pub fn center(&self) -> Option<(usize, usize)> {
        self.center
    }

    pub fn dims(&self) -> (usize, usize) {
        self.image.dims()
    }

    /// Number of nonzero samples.
    pub fn support_len(&self) -> usize {
        self.image.data().iter().filter(|&&v| v != 0.0).count()
    }
}

/// Largest `d >= 0` with `d^2 + dy^2 <= r2`, or `None` when even `d = 0`
/// lies outside the disk.
fn half_width(r2: f64, dy: i64) -> Option<i64> {
    let rem = r2 - (dy * dy) as f64;
    if rem < 0.0 {
        return None;
    }
    let mut d = rem.sqrt().floor() as i64;
    while ((d + 1) * (d + 1) + dy * dy) as f64 <= r2 {
        d += 1;
    }
    while d > 0 && (d * d + dy * dy) as f64 > r2 {
        d -= 1;
    }
    Some(d)
}

/// Uniform disk `(x-k)^2 + (y-l)^2 <= r^2` normalized by its lattice-point
/// count, built around `(rows/2, cols/2)` and then shifted to the origin.
pub fn disk_psf(rows: usize, cols: usize, radius: f64) -> Result<Psf> {
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyImage { rows, cols });
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("PSF radius must be positive, got {radius}")));
    }
    let side = rows.min(cols);
    let reach = radius.floor() as usize;
    if 2.0 * radius > side as f64 || 2 * reach + 1 > side {
        return Err(Error::PsfTooLarge { diameter: 2.0 * radius, side });
    }

    let (k, l) = (rows / 2, cols / 2);
    let r2 = radius * radius;
    let mut centered = vec![0.0; rows * cols];
    let mut count = 0usize;
    for dy in -(reach as i64)..=reach as i64 {
        let Some(w) = half_width(r2, dy) else { continue };
        let row = (k as i64 + dy) as usize;
        for dx in -w..=w {
            centered[row * cols + (l as i64 + dx) as usize] = 1.0;
            count += 1;
        }
    }
    let weight = 1.0 / count as f64;
    for v in centered.iter_mut() {
        *v *= weight;
    }
    let centered = Image::from_parts(rows, cols, centered);
    let image = circular_shift(&centered, -(k as i64), -(l as i64));
    Ok(Psf { image, radius: Some(radius), center: Some((k, l)) })
}

/// Periodic convolution of `f` with the PSF.
pub fn blur(f: &Image, psf: &Psf) -> Result<Image> {
    ensure_same_dims(f.dims(), psf.dims())?;
    circular_convolve(f, &psf.image)
}

/// Statistics of one additive noise draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseRealization {
    /// Standard deviation in intensity units.
    pub sigma: f64,
    pub seed: u64,
    /// Frobenius norm of the noise field actually added.
    pub realized_norm: f64,
    /// `+inf` means no noise was added.
    pub snr_db: f64,
}

impl NoiseRealization {
    /// `sigma * sqrt(pixels)`, the noise norm expected when only sigma is known.
    pub fn expected_norm(&self, pixels: usize) -> f64 {
        self.sigma * (pixels as f64).sqrt()
    }
}

/// Standard normal variates by Box-Muller on a ChaCha8 stream.
pub(crate) struct GaussianStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    pub(crate) fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), spare: None }
    }

    pub(crate) fn next_standard(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] keeps the log finite
        let u1 = 1.0 - self.rng.gen::<f64>();
        let u2: f64 = self.rng.gen();
        let radius = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare = Some(radius * theta.sin());
        radius * theta.cos()
    }
}

/// Adds i.i.d. `N(0, sigma^2)` noise with
/// `sigma = sqrt(mean(g^2) / 10^(snr_db / 10))`.
///
/// `snr_db = +inf` returns `g` unchanged with a zero realization.
pub fn add_gaussian_noise(g: &Image, snr_db: f64, seed: u64) -> Result<(Image, NoiseRealization)> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::InvalidParameter(format!("SNR must be finite or +inf, got {snr_db}")));
    }
    if snr_db == f64::INFINITY {
        let realization = NoiseRealization { sigma: 0.0, seed, realized_norm: 0.0, snr_db };
        return Ok((g.clone(), realization));
    }
    let power = g.data().iter().map(|v| v * v).sum::<f64>() / g.len() as f64;
    if power == 0.0 {
        return Err(Error::UndefinedSnr);
    }
    let sigma = (power / 10f64.powf(snr_db / 10.0)).sqrt();

    let mut stream = GaussianStream::new(seed);
    let noise: Vec<f64> = (0..g.len()).map(|_| sigma * stream.next_standard()).collect();
    let noise = Image::from_parts(g.rows(), g.cols(), noise);
    let realized_norm = frobenius_norm(&noise);
    let noisy = g.add(&noise)?;
    Ok((noisy, NoiseRealization { sigma, seed, realized_norm, snr_db }))
}
