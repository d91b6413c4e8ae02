//! One-shot spectral restorations and regularization-parameter selection.
//!
//! With periodic boundaries the blur operator is diagonal in the Fourier
//! basis, so every restoration here is a pointwise filter on `g_hat`:
//!
//! * pseudo-inverse: `g_hat / K_hat` (zero where `|K_hat| <= tol`);
//! * Tikhonov: `conj(K_hat) g_hat / (|K_hat|^2 + mu)`, the minimizer of
//!   `||A f - g||^2 + mu ||f||^2`.
//!
//! The norms used by the selectors are evaluated spectrally via Parseval, so
//! a full parameter search costs two forward transforms in total.

use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{dft2, hermitian_symmetrize, idft2};
use crate::image::{ensure_same_dims, frobenius_norm, Image, Spectrum};
use crate::simulate::{NoiseRealization, Psf};

/// Search interval for the bisection selectors.
pub const BISECTION_RANGE: (f64, f64) = (1e-12, 1e3);
pub const BISECTION_REL_TOL: f64 = 1e-6;
pub const BISECTION_MAX_ITERS: usize = 200;

/// Log-spaced coarse grid for GCV: `GCV_GRID_POINTS` values over `GCV_RANGE`.
pub const GCV_RANGE: (f64, f64) = (1e-10, 1e2);
pub const GCV_GRID_POINTS: usize = 121;
pub const GCV_REL_TOL: f64 = 1e-4;

/// Regularization-parameter selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    /// `||f_mu|| = E`
    Energy,
    /// `||A f_mu - g|| = epsilon`
    Discrepancy,
    /// `mu = (epsilon / E)^2`
    Miller,
    /// minimizer of the GCV functional
    Gcv,
}

impl Criterion {
    pub const ALL: [Criterion; 4] =
        [Criterion::Energy, Criterion::Discrepancy, Criterion::Miller, Criterion::Gcv];

    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::Energy => "energy",
            Criterion::Discrepancy => "discrepancy",
            Criterion::Miller => "miller",
            Criterion::Gcv => "gcv",
        }
    }
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Criterion::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown selection criterion '{s}'")))
    }
}

/// Outcome of a parameter search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MuSelection {
    pub criterion: Criterion,
    pub mu: f64,
    /// Number of objective evaluations spent.
    pub evaluations: usize,
    /// Final search interval; `None` for the closed-form rule.
    pub bracket: Option<(f64, f64)>,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueSource {
    GroundTruth,
    UserOverride,
}

/// Prescribed energy `E` and discrepancy `epsilon` handed to the selectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelectorInputs {
    pub energy: f64,
    pub epsilon: f64,
    pub energy_source: ValueSource,
    pub epsilon_source: ValueSource,
}

impl SelectorInputs {
    /// `E = ||f_true||`, `epsilon = ||noise||` as realized in simulation.
    pub fn from_ground_truth(truth: &Image, noise: &NoiseRealization) -> Self {
        Self {
            energy: frobenius_norm(truth),
            epsilon: noise.realized_norm,
            energy_source: ValueSource::GroundTruth,
            epsilon_source: ValueSource::GroundTruth,
        }
    }

    pub fn with_energy(mut self, energy: f64) -> Self {
        self.energy = energy;
        self.energy_source = ValueSource::UserOverride;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self.epsilon_source = ValueSource::UserOverride;
        self
    }
}

/// Transfer function and observation spectrum of one deblurring problem,
/// with the per-bin quantities every filter needs.
#[derive(Debug, Clone)]
pub struct SpectralProblem {
    rows: usize,
    cols: usize,
    khat: Vec<Complex64>,
    ghat: Vec<Complex64>,
    /// `|K_hat|^2`
    k_power: Vec<f64>,
    /// `|g_hat|`
    g_mag: Vec<f64>,
}

impl SpectralProblem {
    pub fn new(g: &Image, psf: &Psf) -> Result<Self> {
        ensure_same_dims(g.dims(), psf.dims())?;
        Self::from_spectra(hermitian_symmetrize(&dft2(psf.image())), hermitian_symmetrize(&dft2(g)))
    }

    /// Builds a problem from an explicit transfer function `K_hat` and data
    /// spectrum `g_hat`.
    pub fn from_spectra(khat: Spectrum, ghat: Spectrum) -> Result<Self> {
        ensure_same_dims(khat.dims(), ghat.dims())?;
        let k_power = khat.data().iter().map(|z| z.norm_sqr()).collect();
        let g_mag = ghat.magnitudes();
        Ok(Self {
            rows: khat.rows(),
            cols: khat.cols(),
            khat: khat.data().to_vec(),
            ghat: ghat.data().to_vec(),
            k_power,
            g_mag,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn pixels(&self) -> usize {
        self.rows * self.cols
    }

    pub fn transfer(&self) -> Spectrum {
        Spectrum::from_parts(self.rows, self.cols, self.khat.clone())
    }

    pub fn observation(&self) -> Spectrum {
        Spectrum::from_parts(self.rows, self.cols, self.ghat.clone())
    }

    pub fn min_transfer_magnitude(&self) -> f64 {
        self.k_power.iter().fold(f64::INFINITY, |m, &p| m.min(p)).sqrt()
    }

    /// Norm of the observation `||g||`.
    pub fn observation_norm(&self) -> f64 {
        (self.g_mag.iter().map(|m| m * m).sum::<f64>() / self.pixels() as f64).sqrt()
    }

    fn to_image(&self, data: Vec<Complex64>) -> Image {
        idft2(&Spectrum::from_parts(self.rows, self.cols, data))
    }

    /// `g_hat / K_hat` where `|K_hat| > tol`, zero elsewhere.
    pub fn pseudo_inverse(&self, tol: f64) -> Result<Image> {
        if tol.is_nan() || tol < 0.0 {
            return Err(Error::InvalidParameter(format!("tolerance must be >= 0, got {tol}")));
        }
        let mut dropped = 0usize;
        let data = self
            .khat
            .iter()
            .zip(&self.ghat)
            .map(|(k, g)| {
                if k.norm() > tol {
                    let q = g / k;
                    if q.re.is_finite() && q.im.is_finite() {
                        return q;
                    }
                    dropped += 1;
                }
                Complex64::new(0.0, 0.0)
            })
            .collect();
        if tol == 0.0 && dropped > 0 {
            log::warn!("pseudo-inverse: {dropped} bins overflowed and were zeroed");
        }
        Ok(self.to_image(data))
    }

    /// Tikhonov filter `conj(K_hat) g_hat / (|K_hat|^2 + mu)`.
    ///
    /// `mu = 0` is the pseudo-inverse limit; bins with `K_hat = 0` are then
    /// set to zero.
    pub fn tikhonov(&self, mu: f64) -> Result<Image> {
        check_mu(mu, true)?;
        let mut singular = 0usize;
        let data = self
            .khat
            .iter()
            .zip(&self.ghat)
            .zip(&self.k_power)
            .map(|((k, g), &p)| {
                let denom = p + mu;
                if denom == 0.0 {
                    singular += 1;
                    Complex64::new(0.0, 0.0)
                } else {
                    k.conj() * g / denom
                }
            })
            .collect();
        if singular > 0 {
            log::warn!("tikhonov: mu = 0 with {singular} zero transfer bins; those bins were zeroed");
        }
        Ok(self.to_image(data))
    }

    /// `(||f_mu||, ||A f_mu - g||)` evaluated spectrally.
    pub fn tikhonov_norms(&self, mu: f64) -> Result<(f64, f64)> {
        check_mu(mu, false)?;
        Ok((self.solution_norm(mu), self.residual_norm(mu)))
    }

    pub(crate) fn solution_norm(&self, mu: f64) -> f64 {
        let sum: f64 = self
            .k_power
            .iter()
            .zip(&self.g_mag)
            .map(|(&p, &g)| {
                let t = p.sqrt() * g / (p + mu);
                t * t
            })
            .sum();
        (sum / self.pixels() as f64).sqrt()
    }

    pub(crate) fn residual_norm(&self, mu: f64) -> f64 {
        let sum: f64 = self
            .k_power
            .iter()
            .zip(&self.g_mag)
            .map(|(&p, &g)| {
                let t = mu * g / (p + mu);
                t * t
            })
            .sum();
        (sum / self.pixels() as f64).sqrt()
    }

    /// GCV functional `sum (|g_hat| / (s^2 + mu))^2 / (sum 1 / (s^2 + mu))^2`
    /// with `s = |K_hat|`.
    pub fn gcv(&self, mu: f64) -> Result<f64> {
        check_mu(mu, false)?;
        Ok(self.gcv_unchecked(mu))
    }

    fn gcv_unchecked(&self, mu: f64) -> f64 {
        let (num, den) = self.k_power.iter().zip(&self.g_mag).fold((0.0, 0.0), |(num, den), (&p, &g)| {
            let w = 1.0 / (p + mu);
            (num + (g * w) * (g * w), den + w)
        });
        num / (den * den)
    }

    /// Solves `||f_mu|| = energy` by bisection on `log mu`.
    pub fn select_energy(&self, energy: f64) -> Result<MuSelection> {
        if !(energy > 0.0 && energy.is_finite()) {
            return Err(Error::InvalidParameter(format!("prescribed energy must be > 0, got {energy}")));
        }
        Ok(bisect_log_mu(Criterion::Energy, energy, Slope::Decreasing, |mu| self.solution_norm(mu)))
    }

    /// Solves `||A f_mu - g|| = epsilon` by bisection on `log mu`.
    pub fn select_discrepancy(&self, epsilon: f64) -> Result<MuSelection> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("prescribed discrepancy must be > 0, got {epsilon}")));
        }
        Ok(bisect_log_mu(Criterion::Discrepancy, epsilon, Slope::Increasing, |mu| self.residual_norm(mu)))
    }

    /// Coarse log grid followed by golden-section refinement of the GCV
    /// functional.
    pub fn select_gcv(&self) -> Result<MuSelection> {
        if self.g_mag.iter().all(|&m| m == 0.0) {
            return Err(Error::InvalidParameter("GCV is undefined for an all-zero observation".into()));
        }
        let grid = log_grid(GCV_RANGE.0, GCV_RANGE.1, GCV_GRID_POINTS);
        let values: Vec<f64> = grid.iter().map(|&mu| self.gcv_unchecked(mu)).collect();
        let mut evaluations = values.len();

        // first strict minimum, so ties resolve toward the smaller mu
        let best = values
            .iter()
            .enumerate()
            .fold(0, |best, (i, &v)| if v < values[best] { i } else { best });

        if best == 0 || best == grid.len() - 1 {
            return Ok(MuSelection {
                criterion: Criterion::Gcv,
                mu: grid[best],
                evaluations,
                bracket: Some((grid[best.saturating_sub(1)], grid[(best + 1).min(grid.len() - 1)])),
                converged: false,
            });
        }

        let (lo, hi, mu_refined, v_refined, n) =
            golden_section_log(|mu| self.gcv_unchecked(mu), grid[best - 1], grid[best + 1], GCV_REL_TOL);
        evaluations += n;
        let mu = if v_refined <= values[best] { mu_refined } else { grid[best] };
        Ok(MuSelection {
            criterion: Criterion::Gcv,
            mu,
            evaluations,
            bracket: Some((lo.min(mu), hi.max(mu))),
            converged: true,
        })
    }

    /// Dispatches to the selector for `criterion`.
    pub fn select(&self, criterion: Criterion, inputs: &SelectorInputs) -> Result<MuSelection> {
        match criterion {
            Criterion::Energy => self.select_energy(inputs.energy),
            Criterion::Discrepancy => self.select_discrepancy(inputs.epsilon),
            Criterion::Miller => select_mu_miller(inputs.energy, inputs.epsilon),
            Criterion::Gcv => self.select_gcv(),
        }
    }
}

fn check_mu(mu: f64, allow_zero: bool) -> Result<()> {
    let ok = if allow_zero { mu >= 0.0 } else { mu > 0.0 };
    if !ok || mu.is_nan() {
        let bound = if allow_zero { ">= 0" } else { "> 0" };
        return Err(Error::InvalidParameter(format!("mu must be {bound}, got {mu}")));
    }
    Ok(())
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..n).map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)).collect()
        }
    }
}

#[derive(Clone, Copy)]
enum Slope {
    Increasing,
    Decreasing,
}

fn bisect_log_mu(criterion: Criterion, target: f64, slope: Slope, f: impl Fn(f64) -> f64) -> MuSelection {
    let (mut lo, mut hi) = BISECTION_RANGE;
    let (f_lo, f_hi) = (f(lo), f(hi));
    let mut evaluations = 2;
    let saturated = match slope {
        Slope::Decreasing if target >= f_lo => Some(lo),
        Slope::Decreasing if target <= f_hi => Some(hi),
        Slope::Increasing if target <= f_lo => Some(lo),
        Slope::Increasing if target >= f_hi => Some(hi),
        _ => None,
    };
    if let Some(mu) = saturated {
        log::warn!("{criterion} selection: target {target:.6e} unreachable in [{lo:e}, {hi:e}], clamped to {mu:e}");
        return MuSelection { criterion, mu, evaluations, bracket: Some((lo, hi)), converged: false };
    }

    let mut converged = false;
    for _ in 0..BISECTION_MAX_ITERS {
        if (hi - lo) / lo < BISECTION_REL_TOL {
            converged = true;
            break;
        }
        let mid = (lo * hi).sqrt();
        let v = f(mid);
        evaluations += 1;
        let below_root = match slope {
            Slope::Increasing => v < target,
            Slope::Decreasing => v > target,
        };
        if below_root {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    MuSelection { criterion, mu: (lo * hi).sqrt(), evaluations, bracket: Some((lo, hi)), converged }
}

/// Golden-section minimization of `f` over `log mu` in `[lo, hi]`.
/// Returns `(bracket_lo, bracket_hi, best_mu, best_value, evaluations)`.
fn golden_section_log(f: impl Fn(f64) -> f64, lo: f64, hi: f64, rel_tol: f64) -> (f64, f64, f64, f64, usize) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let width_tol = (1.0 + rel_tol).ln();
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c.exp()), f(d.exp()));
    let mut evaluations = 2;
    while b - a > width_tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c.exp());
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d.exp());
        }
        evaluations += 1;
    }
    let (best, value) = if fc <= fd { (c, fc) } else { (d, fd) };
    (a.exp(), b.exp(), best.exp(), value, evaluations)
}

// Free-function entry points taking (g, psf) directly.

pub fn pseudo_inverse_deblur(g: &Image, psf: &Psf, tol: f64) -> Result<Image> {
    SpectralProblem::new(g, psf)?.pseudo_inverse(tol)
}

pub fn tikhonov_deblur(g: &Image, psf: &Psf, mu: f64) -> Result<Image> {
    SpectralProblem::new(g, psf)?.tikhonov(mu)
}

/// `(solution_norm, residual_norm)` of the Tikhonov solution at `mu`.
pub fn tikhonov_norms(g: &Image, psf: &Psf, mu: f64) -> Result<(f64, f64)> {
    SpectralProblem::new(g, psf)?.tikhonov_norms(mu)
}

pub fn select_mu_energy(g: &Image, psf: &Psf, energy: f64) -> Result<MuSelection> {
    SpectralProblem::new(g, psf)?.select_energy(energy)
}

pub fn select_mu_discrepancy(g: &Image, psf: &Psf, epsilon: f64) -> Result<MuSelection> {
    SpectralProblem::new(g, psf)?.select_discrepancy(epsilon)
}

/// Miller's rule, `mu = (epsilon / E)^2`.
pub fn select_mu_miller(energy: f64, epsilon: f64) -> Result<MuSelection> {
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(Error::InvalidParameter(format!("prescribed energy must be > 0, got {energy}")));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("prescribed discrepancy must be >= 0, got {epsilon}")));
    }
    let ratio = epsilon / energy;
    Ok(MuSelection {
        criterion: Criterion::Miller,
        mu: ratio * ratio,
        evaluations: 0,
        bracket: None,
        converged: true,
    })
}

pub fn gcv_value(g: &Image, psf: &Psf, mu: f64) -> Result<f64> {
    SpectralProblem::new(g, psf)?.gcv(mu)
}

pub fn select_mu_gcv(g: &Image, psf: &Psf) -> Result<MuSelection> {
    SpectralProblem::new(g, psf)?.select_gcv()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::circular_convolve;
    use crate::simulate::{add_gaussian_noise, blur, disk_psf};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(rows: usize, cols: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(rows, cols, |_, _| rng.gen_range(0.0..255.0)).unwrap()
    }

    fn single_bin(s: f64, v: f64) -> SpectralProblem {
        SpectralProblem::from_spectra(
            Spectrum::new(1, 1, vec![Complex64::new(s, 0.0)]).unwrap(),
            Spectrum::new(1, 1, vec![Complex64::new(v, 0.0)]).unwrap(),
        )
        .unwrap()
    }

    fn noisy_instance(n: usize, radius: f64, seed: u64) -> (Image, Psf, Image) {
        let f = random_image(n, n, seed);
        let psf = disk_psf(n, n, radius).unwrap();
        let (g, _) = add_gaussian_noise(&blur(&f, &psf).unwrap(), 30.0, seed).unwrap();
        (f, psf, g)
    }

    /// 0.8 delta + 0.2 (r = 1 disk): `K_hat = 0.8 + 0.2 * m` with `m >= -0.6`.
    fn well_conditioned_psf(n: usize) -> Psf {
        let disk = disk_psf(n, n, 1.0).unwrap();
        let delta = Image::delta(n, n, 0, 0).unwrap();
        Psf::from_kernel(delta.scale(0.8).add(&disk.image().scale(0.2)).unwrap()).unwrap()
    }

    #[test]
    fn delta_psf_filters() {
        let g = random_image(6, 9, 1);
        let psf = disk_psf(6, 9, 0.5).unwrap();
        assert!(pseudo_inverse_deblur(&g, &psf, 0.0).unwrap().max_abs_diff(&g).unwrap() < 1e-10);
        assert!(tikhonov_deblur(&g, &psf, 0.0).unwrap().max_abs_diff(&g).unwrap() < 1e-10);
        let half = tikhonov_deblur(&g, &psf, 1.0).unwrap();
        assert!(half.max_abs_diff(&g.scale(0.5)).unwrap() < 1e-10);
        let gone = tikhonov_deblur(&g, &psf, 1e12).unwrap();
        assert!(frobenius_norm(&gone) < 1e-9 * frobenius_norm(&g));
    }

    #[test]
    fn exact_inversion_with_well_conditioned_psf() {
        let f = random_image(24, 24, 2);
        let psf = well_conditioned_psf(24);
        let p = SpectralProblem::new(&blur(&f, &psf).unwrap(), &psf).unwrap();
        assert!(p.min_transfer_magnitude() >= 0.2);
        let rel = |x: &Image| frobenius_norm(&x.sub(&f).unwrap()) / frobenius_norm(&f);
        assert!(rel(&p.pseudo_inverse(0.0).unwrap()) < 1e-6);
        let tik = p.tikhonov(1e-12).unwrap();
        assert!(rel(&tik) < 1e-5);
        assert!(tik.max_abs_diff(&p.pseudo_inverse(0.0).unwrap()).unwrap() < 1e-6);
    }

    #[test]
    fn pseudo_inverse_tolerance_zeroes_bins() {
        let g = random_image(8, 8, 3);
        let psf = disk_psf(8, 8, 0.5).unwrap();
        // |K_hat| = 1 everywhere, so tol >= 1 zeroes all bins
        let out = pseudo_inverse_deblur(&g, &psf, 1.0).unwrap();
        assert_eq!(frobenius_norm(&out), 0.0);
        assert!(pseudo_inverse_deblur(&g, &psf, -1.0).is_err());
    }

    #[test]
    fn tikhonov_zero_mu_with_singular_bins() {
        let khat = Spectrum::new(1, 2, vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]).unwrap();
        let ghat = Spectrum::new(1, 2, vec![Complex64::new(2.0, 0.0), Complex64::new(4.0, 0.0)]).unwrap();
        let p = SpectralProblem::from_spectra(khat, ghat).unwrap();
        let out = p.tikhonov(0.0).unwrap();
        // only the DC bin survives: value 2 spread over two pixels
        assert!((out.get(0, 0) - 1.0).abs() < 1e-14 && (out.get(0, 1) - 1.0).abs() < 1e-14);
        assert!(p.tikhonov(-1.0).is_err());
        assert!(p.tikhonov_norms(0.0).is_err());
    }

    #[test]
    fn norms_single_bin() {
        let p = single_bin(0.5, 3.0);
        let (sol, res) = p.tikhonov_norms(0.1).unwrap();
        assert!((sol - 0.5 * 3.0 / 0.35).abs() < 1e-14);
        assert!((res - 0.1 * 3.0 / 0.35).abs() < 1e-14);
    }

    #[test]
    fn norms_match_spatial_recomputation() {
        let (_, psf, g) = noisy_instance(16, 2.0, 4);
        for mu in [1e-6, 1e-3, 0.1, 10.0] {
            let (sol, res) = tikhonov_norms(&g, &psf, mu).unwrap();
            let f_mu = tikhonov_deblur(&g, &psf, mu).unwrap();
            let resid = circular_convolve(&f_mu, psf.image()).unwrap().sub(&g).unwrap();
            assert!((sol - frobenius_norm(&f_mu)).abs() < 1e-8 * sol.max(1.0));
            assert!((res - frobenius_norm(&resid)).abs() < 1e-8 * res.max(1.0));
        }
        let (_, res) = tikhonov_norms(&g, &psf, 1e12).unwrap();
        assert!((res - frobenius_norm(&g)).abs() / frobenius_norm(&g) < 1e-6);
    }

    #[test]
    fn energy_closed_form() {
        let (s, v) = (0.3, 5.0);
        let p = single_bin(s, v);
        for energy in [4.0, 10.0, 16.0] {
            let expected = s * v / energy - s * s;
            let sel = p.select_energy(energy).unwrap();
            assert!(sel.converged);
            assert!((sel.mu - expected).abs() / expected < 1e-6, "{} vs {expected}", sel.mu);
            let (lo, hi) = sel.bracket.unwrap();
            assert!(lo <= sel.mu && sel.mu <= hi);
        }
    }

    #[test]
    fn discrepancy_closed_form() {
        let (s, v) = (0.3, 5.0);
        let p = single_bin(s, v);
        for eps in [0.01, 1.0, 4.5] {
            let expected = eps * s * s / (v - eps);
            let sel = p.select_discrepancy(eps).unwrap();
            assert!(sel.converged);
            assert!((sel.mu - expected).abs() / expected < 1e-6);
        }
    }

    #[test]
    fn selectors_recover_known_mu() {
        let (_, psf, g) = noisy_instance(16, 2.0, 5);
        let p = SpectralProblem::new(&g, &psf).unwrap();
        let (energy, eps) = p.tikhonov_norms(1e-3).unwrap();
        let e_sel = p.select_energy(energy).unwrap();
        let d_sel = p.select_discrepancy(eps).unwrap();
        assert!((e_sel.mu - 1e-3).abs() / 1e-3 < 1e-6);
        assert!((d_sel.mu - 1e-3).abs() / 1e-3 < 1e-6);
    }

    #[test]
    fn selectors_saturate_at_bracket_edges() {
        let p = single_bin(0.3, 5.0);
        // solution norm tops out at v / s = 16.67
        let sel = p.select_energy(100.0).unwrap();
        assert_eq!((sel.mu, sel.converged), (BISECTION_RANGE.0, false));
        let sel = p.select_energy(1e-9).unwrap();
        assert_eq!((sel.mu, sel.converged), (BISECTION_RANGE.1, false));
        // residual norm is bounded by v = 5
        let sel = p.select_discrepancy(10.0).unwrap();
        assert_eq!((sel.mu, sel.converged), (BISECTION_RANGE.1, false));
        let sel = p.select_discrepancy(1e-20).unwrap();
        assert_eq!((sel.mu, sel.converged), (BISECTION_RANGE.0, false));
        assert!(p.select_energy(0.0).is_err());
        assert!(p.select_discrepancy(0.0).is_err());
    }

    #[test]
    fn miller() {
        assert_eq!(select_mu_miller(2.0, 1.0).unwrap().mu, 0.25);
        assert_eq!(select_mu_miller(3.7, 3.7).unwrap().mu, 1.0);
        let sel = select_mu_miller(1234.5, 6.78).unwrap();
        assert_eq!(sel.mu, (6.78f64 / 1234.5).powi(2));
        assert!(sel.bracket.is_none());
        assert!(select_mu_miller(0.0, 1.0).is_err());
    }

    #[test]
    fn gcv_single_bin_and_positivity() {
        assert!((single_bin(1.0, 2.0).gcv(1.0).unwrap() - 4.0).abs() < 1e-14);
        let (_, psf, g) = noisy_instance(8, 1.0, 6);
        for mu in log_grid(1e-9, 1e2, 12) {
            assert!(gcv_value(&g, &psf, mu).unwrap() > 0.0);
        }
    }

    #[test]
    fn gcv_selection_certificate() {
        let (_, psf, g) = noisy_instance(32, 3.0, 7);
        let p = SpectralProblem::new(&g, &psf).unwrap();
        let sel = p.select_gcv().unwrap();
        assert!(sel.converged);
        let grid = log_grid(GCV_RANGE.0, GCV_RANGE.1, GCV_GRID_POINTS);
        let i = grid.partition_point(|&m| m <= sel.mu);
        let v = p.gcv(sel.mu).unwrap();
        assert!(v <= p.gcv(grid[i - 1]).unwrap() && v <= p.gcv(grid[i]).unwrap());
        let (lo, hi) = sel.bracket.unwrap();
        assert!(lo <= sel.mu && sel.mu <= hi);
    }

    #[test]
    fn gcv_rejects_zero_observation() {
        let psf = disk_psf(4, 4, 1.0).unwrap();
        assert!(select_mu_gcv(&Image::zeros(4, 4).unwrap(), &psf).is_err());
    }

    #[test]
    fn norms_are_monotone_in_mu() {
        let (_, psf, g) = noisy_instance(32, 3.0, 8);
        let p = SpectralProblem::new(&g, &psf).unwrap();
        let pts: Vec<_> = log_grid(1e-8, 1e2, 11).into_iter().map(|m| p.tikhonov_norms(m).unwrap()).collect();
        for w in pts.windows(2) {
            assert!(w[1].0 < w[0].0);
            assert!(w[1].1 > w[0].1);
        }
    }

    #[test]
    fn criterion_parsing() {
        for c in Criterion::ALL {
            assert_eq!(c.as_str().parse::<Criterion>().unwrap(), c);
        }
        assert!("lcurve".parse::<Criterion>().is_err());
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-7, 10.0, 30);
        assert_eq!(g.len(), 30);
        assert!((g[0] - 1e-7).abs() < 1e-20 && (g[29] - 10.0).abs() < 1e-12);
    }
}
