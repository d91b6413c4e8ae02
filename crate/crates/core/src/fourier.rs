//! 2-D discrete Fourier transform and the spectral helpers built on it.
//!
//! Convention: the forward transform is unscaled,
//! `F(u,v) = sum_x sum_y f(x,y) exp(-2 pi i (u x / M + v y / N))`,
//! and the inverse carries the `1/(M N)` factor. Spectral norms compensate
//! with `1/sqrt(M N)` so that they agree with spatial Frobenius norms.

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::sync::Arc;

use crate::error::Result;
use crate::image::{ensure_same_dims, Image, Spectrum};

/// Imaginary residue above which an inverse transform is reported as not
/// coming from a conjugate-symmetric spectrum.
pub const IMAG_RESIDUE_LIMIT: f64 = 1e-8;

fn transform_in_place(rows: usize, cols: usize, data: &mut [Complex64], direction: FftDirection) {
    let mut planner = FftPlanner::new();
    let row_fft: Arc<dyn Fft<f64>> = planner.plan_fft(cols, direction);
    let col_fft: Arc<dyn Fft<f64>> = planner.plan_fft(rows, direction);

    let mut scratch =
        vec![Complex64::new(0.0, 0.0); row_fft.get_inplace_scratch_len().max(col_fft.get_inplace_scratch_len())];
    for row in data.chunks_exact_mut(cols) {
        row_fft.process_with_scratch(row, &mut scratch);
    }

    let mut column = vec![Complex64::new(0.0, 0.0); rows];
    for c in 0..cols {
        for r in 0..rows {
            column[r] = data[r * cols + c];
        }
        col_fft.process_with_scratch(&mut column, &mut scratch);
        for r in 0..rows {
            data[r * cols + c] = column[r];
        }
    }
}

/// Unscaled forward 2-D DFT.
pub fn dft2(img: &Image) -> Spectrum {
    let (rows, cols) = img.dims();
    let mut data: Vec<Complex64> = img.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform_in_place(rows, cols, &mut data, FftDirection::Forward);
    Spectrum::from_parts(rows, cols, data)
}

/// Inverse 2-D DFT with `1/(M N)` normalization, returning the real part and
/// the largest discarded imaginary magnitude.
pub fn idft2_with_residue(spec: &Spectrum) -> (Image, f64) {
    let (rows, cols) = spec.dims();
    let mut data = spec.data().to_vec();
    transform_in_place(rows, cols, &mut data, FftDirection::Inverse);
    let scale = 1.0 / (rows * cols) as f64;
    let mut residue = 0.0f64;
    let real = data
        .iter()
        .map(|z| {
            residue = residue.max((z.im * scale).abs());
            z.re * scale
        })
        .collect();
    (Image::from_parts(rows, cols, real), residue)
}

/// Inverse 2-D DFT. The imaginary part is dropped; a residue above
/// [`IMAG_RESIDUE_LIMIT`] is logged as a warning.
pub fn idft2(spec: &Spectrum) -> Image {
    let (img, residue) = idft2_with_residue(spec);
    if residue > IMAG_RESIDUE_LIMIT {
        log::warn!(
            "idft2: discarded imaginary residue {residue:.3e} on a {}x{} spectrum (not conjugate-symmetric)",
            spec.rows(),
            spec.cols()
        );
    }
    img
}

/// Parseval-scaled norm: `sqrt(sum |F|^2) / sqrt(M N)`.
pub fn spectral_norm(spec: &Spectrum) -> f64 {
    let sum: f64 = spec.data().iter().map(|z| z.norm_sqr()).sum();
    (sum / spec.len() as f64).sqrt()
}

/// Forces exact conjugate symmetry `F(-u,-v) = conj(F(u,v))` by averaging
/// each bin with its mirror. The DFT of a real image satisfies this up to
/// rounding; making it exact keeps pointwise recursions on paired bins
/// bit-for-bit conjugate.
pub fn hermitian_symmetrize(spec: &Spectrum) -> Spectrum {
    let (rows, cols) = spec.dims();
    let d = spec.data();
    let mut out = d.to_vec();
    for r in 0..rows {
        let mr = (rows - r) % rows;
        for c in 0..cols {
            let mc = (cols - c) % cols;
            let (a, b) = (d[r * cols + c], d[mr * cols + mc].conj());
            out[r * cols + c] = (a + b) * 0.5;
        }
    }
    Spectrum::from_parts(rows, cols, out)
}

/// Pointwise complex product of two spectra of equal size.
pub fn multiply(a: &Spectrum, b: &Spectrum) -> Result<Spectrum> {
    ensure_same_dims(a.dims(), b.dims())?;
    let data = a.data().iter().zip(b.data()).map(|(x, y)| x * y).collect();
    Ok(Spectrum::from_parts(a.rows(), a.cols(), data))
}

/// Periodic convolution `f (*) k` via the convolution theorem.
pub fn circular_convolve(f: &Image, k: &Image) -> Result<Image> {
    ensure_same_dims(f.dims(), k.dims())?;
    Ok(idft2(&multiply(&dft2(f), &dft2(k))?))
}

/// `out(r, c) = in((r - dr) mod rows, (c - dc) mod cols)`.
pub fn circular_shift(img: &Image, dr: i64, dc: i64) -> Image {
    let (rows, cols) = img.dims();
    let sr = dr.rem_euclid(rows as i64) as usize;
    let sc = dc.rem_euclid(cols as i64) as usize;
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        let src_r = (r + rows - sr) % rows;
        for c in 0..cols {
            let src_c = (c + cols - sc) % cols;
            out[r * cols + c] = img.data()[src_r * cols + src_c];
        }
    }
    Image::from_parts(rows, cols, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::frobenius_norm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(rows: usize, cols: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0)).unwrap()
    }

    /// Direct periodic sum, O(M^2 N^2).
    fn brute_convolve(f: &Image, k: &Image) -> Image {
        let (m, n) = f.dims();
        Image::from_fn(m, n, |x, y| {
            let mut acc = 0.0;
            for a in 0..m {
                for b in 0..n {
                    acc += f.get(a, b) * k.get((x + m - a) % m, (y + n - b) % n);
                }
            }
            acc
        })
        .unwrap()
    }

    #[test]
    fn impulse_transforms_to_ones() {
        let spec = dft2(&Image::delta(4, 4, 0, 0).unwrap());
        for z in spec.data() {
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn constant_transforms_to_dc() {
        let spec = dft2(&Image::filled(3, 5, 2.5).unwrap());
        assert!((spec.get(0, 0) - Complex64::new(2.5 * 15.0, 0.0)).norm() < 1e-10);
        for (i, z) in spec.data().iter().enumerate().skip(1) {
            assert!(z.norm() < 1e-10, "bin {i} = {z}");
        }
    }

    #[test]
    fn ones_spectrum_inverts_to_impulse() {
        let spec = Spectrum::new(4, 4, vec![Complex64::new(1.0, 0.0); 16]).unwrap();
        let img = idft2(&spec);
        assert!(img.max_abs_diff(&Image::delta(4, 4, 0, 0).unwrap()).unwrap() < 1e-14);
    }

    #[test]
    fn symmetrized_spectrum_is_exactly_hermitian() {
        let x = random_image(6, 5, 12);
        let spec = hermitian_symmetrize(&dft2(&x));
        for r in 0..6 {
            for c in 0..5 {
                assert_eq!(spec.get(r, c), spec.get((6 - r) % 6, (5 - c) % 5).conj());
            }
        }
        assert!(idft2(&spec).max_abs_diff(&x).unwrap() < 1e-12);
    }

    #[test]
    fn zero_spectrum() {
        let spec = Spectrum::zeros(3, 3).unwrap();
        assert_eq!(idft2(&spec), Image::zeros(3, 3).unwrap());
        assert_eq!(spectral_norm(&spec), 0.0);
    }

    #[test]
    fn real_image_has_negligible_imaginary_residue() {
        let (_, residue) = idft2_with_residue(&dft2(&random_image(17, 12, 1)));
        assert!(residue < 1e-10);
    }

    #[test]
    fn asymmetric_spectrum_reports_residue() {
        let mut data = vec![Complex64::new(0.0, 0.0); 9];
        data[1] = Complex64::new(1.0, 0.0);
        let (_, residue) = idft2_with_residue(&Spectrum::new(3, 3, data).unwrap());
        assert!(residue > IMAG_RESIDUE_LIMIT);
    }

    #[test]
    fn round_trip_and_parseval() {
        for (i, &(r, c)) in [(32, 32), (16, 16), (5, 3), (1, 7)].iter().enumerate() {
            let x = random_image(r, c, i as u64);
            let spec = dft2(&x);
            assert!(idft2(&spec).max_abs_diff(&x).unwrap() < 1e-10);
            let rel = (spectral_norm(&spec) - frobenius_norm(&x)).abs() / frobenius_norm(&x);
            assert!(rel < 1e-10);
        }
    }

    #[test]
    fn spectral_norm_hand_value() {
        let spec = Spectrum::new(2, 2, vec![Complex64::new(2.0, 0.0); 4]).unwrap();
        assert!((spectral_norm(&spec) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn linearity() {
        let x = random_image(9, 6, 3);
        let y = random_image(9, 6, 4);
        let (a, b) = (1.7, -0.3);
        let lhs = dft2(&x.scale(a).add(&y.scale(b)).unwrap());
        let (fx, fy) = (dft2(&x), dft2(&y));
        for i in 0..lhs.len() {
            let rhs = fx.data()[i] * a + fy.data()[i] * b;
            assert!((lhs.data()[i] - rhs).norm() < 1e-10);
        }
    }

    #[test]
    fn convolution_identity_and_shift() {
        let f = random_image(6, 5, 7);
        let id = circular_convolve(&f, &Image::delta(6, 5, 0, 0).unwrap()).unwrap();
        assert!(id.max_abs_diff(&f).unwrap() < 1e-10);

        let shifted =
            circular_convolve(&Image::delta(4, 4, 0, 0).unwrap(), &Image::delta(4, 4, 1, 0).unwrap()).unwrap();
        assert!(shifted.max_abs_diff(&Image::delta(4, 4, 1, 0).unwrap()).unwrap() < 1e-10);
    }

    #[test]
    fn convolution_matches_brute_force_and_commutes() {
        let mut seed = 100;
        for r in [1usize, 2, 3, 5, 8, 11, 16] {
            for c in [1usize, 4, 7, 16] {
                let f = random_image(r, c, seed);
                let k = random_image(r, c, seed + 1);
                seed += 2;
                let fast = circular_convolve(&f, &k).unwrap();
                assert!(fast.max_abs_diff(&brute_convolve(&f, &k)).unwrap() < 1e-8, "{r}x{c}");
                let swapped = circular_convolve(&k, &f).unwrap();
                assert!(fast.max_abs_diff(&swapped).unwrap() < 1e-10);
            }
        }
    }

    #[test]
    fn convolution_dimension_mismatch() {
        let err = circular_convolve(&Image::zeros(2, 2).unwrap(), &Image::zeros(2, 3).unwrap());
        assert!(err.is_err());
    }

    #[test]
    fn shifts() {
        let x = random_image(4, 6, 9);
        assert_eq!(circular_shift(&x, 0, 0), x);
        assert_eq!(circular_shift(&x, 4, 6), x);
        assert_eq!(circular_shift(&x, -8, 12), x);
        let moved = circular_shift(&Image::delta(3, 3, 1, 1).unwrap(), -1, -1);
        assert_eq!(moved, Image::delta(3, 3, 0, 0).unwrap());
        let moved = circular_shift(&Image::delta(3, 4, 0, 0).unwrap(), 2, 3);
        assert_eq!(moved, Image::delta(3, 4, 2, 3).unwrap());
    }
}
