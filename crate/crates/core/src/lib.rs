//! Non-blind restoration of images degraded by out-of-focus blur and
//! additive Gaussian noise.
//!
//! The crate is organised bottom-up:
//!
//! * [`image`] holds the real-valued [`Image`] and complex [`Spectrum`] grids,
//!   norms, and the PGM / RAWF64 codecs.
//! * [`fourier`] provides the 2-D DFT, Parseval-consistent norms, circular
//!   shifts and FFT-based periodic convolution.
//! * [`simulate`] builds the disk PSF, blurs, and adds SNR-controlled noise.
//! * [`direct`] implements the one-shot spectral filters (pseudo-inverse,
//!   Tikhonov) and the four regularization-parameter selectors.
//! * [`cg`] runs conjugate gradient on the normal equations entirely in the
//!   Fourier domain.
//! * [`metrics`] computes the relative restoration error and assembles reports.
//! * [`cli`] wires everything into the `deblur` command-line tool.

pub mod cg;
pub mod cli;
pub mod direct;
pub mod error;
pub mod fourier;
pub mod image;
pub mod metrics;
pub mod simulate;

pub use cg::{cg_deblur, CgRecord, CgStop, CgTrace};
pub use direct::{
    gcv_value, pseudo_inverse_deblur, select_mu_discrepancy, select_mu_energy, select_mu_gcv,
    select_mu_miller, tikhonov_deblur, tikhonov_norms, Criterion, MuSelection, SelectorInputs,
    SpectralProblem,
};
pub use error::{Error, Result};
pub use image::{frobenius_norm, read_pgm, read_raw, write_pgm, write_raw, Image, Spectrum};
pub use metrics::{relative_error, DeblurReport, Method, Parameter};
pub use simulate::{add_gaussian_noise, blur, disk_psf, NoiseRealization, Psf};
