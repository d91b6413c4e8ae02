//! Conjugate gradient on the normal equations `|K_hat|^2 f_hat = conj(K_hat) g_hat`.
//!
//! The normal operator is diagonal in the Fourier basis, so the whole
//! recursion runs on spectra and the image is formed by one inverse
//! transform at the end. The iteration count acts as the regularization
//! parameter: with noisy data the iterates first approach the true image and
//! then drift toward the noise-dominated least-squares solution.

use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::direct::SpectralProblem;
use crate::error::{Error, Result};
use crate::fourier::{dft2, idft2};
use crate::image::{ensure_same_dims, Image, Spectrum};
use crate::simulate::Psf;

/// Iterations run by the fixed-count rule unless overridden.
pub const DEFAULT_ITERATIONS: usize = 50;
/// Safety cap for discrepancy stopping.
pub const DEFAULT_K_CAP: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CgStop {
    /// Run exactly this many iterations.
    Fixed(usize),
    /// Stop at the first `k` with `||A f_k - g|| <= epsilon`, or at `k_cap`.
    Discrepancy { epsilon: f64, k_cap: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    FixedCount,
    Discrepancy,
    IterationCap,
    /// Normal-equation residual vanished.
    Exact,
}

/// Diagnostics of iterate `f_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CgRecord {
    pub k: usize,
    /// `||A f_k - g||`
    pub residual_norm: f64,
    /// `||f_k||`
    pub solution_norm: f64,
    /// `sum |r_hat_k|^2`, the normal-equation residual (unscaled spectral sum).
    pub normal_residual: f64,
    /// `||f_k - f_true|| / ||f_true||` when the truth is known.
    pub relative_error: Option<f64>,
    /// Step length used to go from `f_k` to `f_{k+1}`.
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CgTrace {
    pub records: Vec<CgRecord>,
    pub stop_reason: StopReason,
}

impl CgTrace {
    /// Number of completed iterations.
    pub fn iterations(&self) -> usize {
        self.records.len() - 1
    }

    pub fn last(&self) -> &CgRecord {
        self.records.last().expect("trace always holds the k = 0 record")
    }
}

struct Monitor<'a> {
    khat: &'a [Complex64],
    ghat: &'a [Complex64],
    truth: Option<(&'a [Complex64], f64)>,
    scale: f64,
}

impl Monitor<'_> {
    fn record(&self, k: usize, f: &[Complex64], normal_residual: f64) -> CgRecord {
        let mut res = 0.0;
        let mut sol = 0.0;
        for ((fk, kk), gg) in f.iter().zip(self.khat).zip(self.ghat) {
            res += (kk * fk - gg).norm_sqr();
            sol += fk.norm_sqr();
        }
        let relative_error = self.truth.map(|(t, t_norm_sq)| {
            let err: f64 = f.iter().zip(t).map(|(a, b)| (a - b).norm_sqr()).sum();
            (err / t_norm_sq).sqrt()
        });
        CgRecord {
            k,
            residual_norm: (res * self.scale).sqrt(),
            solution_norm: (sol * self.scale).sqrt(),
            normal_residual,
            relative_error,
            alpha: None,
            beta: None,
        }
    }
}

impl SpectralProblem {
    /// Runs the CG recursion; `truth_hat` enables per-iteration error tracking.
    pub fn cg(&self, stop: CgStop, truth_hat: Option<&Spectrum>) -> Result<(Image, CgTrace)> {
        let (k_limit, epsilon) = match stop {
            CgStop::Fixed(k) => (k, None),
            CgStop::Discrepancy { epsilon, k_cap } => {
                if !(epsilon > 0.0 && epsilon.is_finite()) {
                    return Err(Error::InvalidParameter(format!("discrepancy must be > 0, got {epsilon}")));
                }
                if k_cap == 0 {
                    return Err(Error::InvalidParameter("iteration cap must be >= 1".into()));
                }
                (k_cap, Some(epsilon))
            }
        };
        if let Some(t) = truth_hat {
            ensure_same_dims(t.dims(), self.dims())?;
        }

        let khat = self.transfer();
        let ghat = self.observation();
        let (rows, cols) = self.dims();
        let khat = khat.data();
        let ghat = ghat.data();
        let k_power: Vec<f64> = khat.iter().map(|z| z.norm_sqr()).collect();

        let truth = match truth_hat {
            Some(t) => {
                let norm_sq: f64 = t.data().iter().map(|z| z.norm_sqr()).sum();
                if norm_sq == 0.0 {
                    return Err(Error::ZeroReference);
                }
                Some((t.data(), norm_sq))
            }
            None => None,
        };
        let monitor = Monitor { khat, ghat, truth, scale: 1.0 / (rows * cols) as f64 };

        let mut f = vec![Complex64::new(0.0, 0.0); rows * cols];
        let mut r: Vec<Complex64> = khat.iter().zip(ghat).map(|(k, g)| k.conj() * g).collect();
        let mut p = r.clone();
        let mut rr: f64 = r.iter().map(|z| z.norm_sqr()).sum();

        let mut records = vec![monitor.record(0, &f, rr)];
        let mut k = 0;
        let stop_reason = loop {
            if let Some(eps) = epsilon {
                if records[k].residual_norm <= eps {
                    break StopReason::Discrepancy;
                }
            }
            if k == k_limit {
                break if epsilon.is_some() { StopReason::IterationCap } else { StopReason::FixedCount };
            }
            if rr == 0.0 {
                break StopReason::Exact;
            }

            let curvature: f64 = k_power.iter().zip(&p).map(|(w, z)| w * z.norm_sqr()).sum();
            if curvature <= 0.0 {
                return Err(Error::CgBreakdown { iteration: k });
            }
            let alpha = rr / curvature;
            for ((fi, ri), (pi, w)) in f.iter_mut().zip(r.iter_mut()).zip(p.iter().zip(&k_power)) {
                *fi += pi * alpha;
                *ri -= pi * (alpha * w);
            }
            let rr_next: f64 = r.iter().map(|z| z.norm_sqr()).sum();
            let beta = rr_next / rr;
            for (pi, ri) in p.iter_mut().zip(&r) {
                *pi = ri + *pi * beta;
            }
            rr = rr_next;

            records[k].alpha = Some(alpha);
            records[k].beta = Some(beta);
            k += 1;
            records.push(monitor.record(k, &f, rr));
        };

        let image = idft2(&Spectrum::from_parts(rows, cols, f));
        Ok((image, CgTrace { records, stop_reason }))
    }
}

/// Fourier-domain CG restoration of `g` blurred by `psf`.
pub fn cg_deblur(g: &Image, psf: &Psf, stop: CgStop, truth: Option<&Image>) -> Result<(Image, CgTrace)> {
    let problem = SpectralProblem::new(g, psf)?;
    let truth_hat = match truth {
        Some(t) => {
            ensure_same_dims(t.dims(), g.dims())?;
            Some(dft2(t))
        }
        None => None,
    };
    problem.cg(stop, truth_hat.as_ref())
}
