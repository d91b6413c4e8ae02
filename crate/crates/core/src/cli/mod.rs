//! `deblur` command-line front end.
//!
//! Every command rebuilds the degraded observation in memory from the true
//! image and `--radius/--snr/--seed`, which makes runs reproducible from the
//! flags alone. `--observed` (with optional `--psf` and `--noise`) switches to
//! user-supplied data instead.

mod commands;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{load_scenario, run, Scenario};
pub use output::{format_float, write_csv};

use crate::cg::DEFAULT_ITERATIONS;
use crate::direct::Criterion;

#[derive(Debug, Parser)]
#[command(name = "deblur", version, about = "Out-of-focus image deblurring experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Blur and add noise; writes blurred.pgm, blurred_noisy.pgm, psf.raw, noise.json.
    Simulate(CommonArgs),
    /// Restore with one method; writes restored.pgm and report.json.
    Deblur {
        #[command(flatten)]
        common: CommonArgs,
        /// Include wall-clock time in report.json (makes it non-reproducible).
        #[arg(long)]
        timing: bool,
        #[command(subcommand)]
        method: MethodArgs,
    },
    /// Tikhonov restoration error over a log-spaced mu grid; writes sweep_mu.csv.
    SweepMu {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 1e-7)]
        mu_min: f64,
        #[arg(long, default_value_t = 10.0)]
        mu_max: f64,
        #[arg(long, default_value_t = 30)]
        mu_points: usize,
        /// Also write one restored PGM per grid point.
        #[arg(long)]
        save_images: bool,
    },
    /// CG restoration error per iteration; writes sweep_k.csv.
    SweepIters {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 200)]
        k_max: usize,
    },
    /// All four mu selectors plus CG with discrepancy stopping; writes table.csv and compare.json.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = crate::cg::DEFAULT_K_CAP)]
        k_cap: usize,
    },
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// True image (binary PGM).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Disk PSF radius in pixels.
    #[arg(long, default_value_t = 15.0)]
    pub radius: f64,
    /// Signal-to-noise ratio in dB, or "inf" for no noise.
    #[arg(long, default_value = "40", value_parser = parse_snr)]
    pub snr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Use this observation (PGM, or RAWF64 when the extension is .raw) instead of simulating.
    #[arg(long)]
    pub observed: Option<PathBuf>,
    /// PSF in RAWF64, origin-centered; defaults to the disk of --radius.
    #[arg(long, requires = "observed")]
    pub psf: Option<PathBuf>,
    /// noise.json from a previous simulate run, supplying energy and epsilon.
    #[arg(long, requires = "observed")]
    pub noise: Option<PathBuf>,
    /// Override the prescribed energy E.
    #[arg(long)]
    pub energy: Option<f64>,
    /// Override the prescribed discrepancy epsilon.
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum MethodArgs {
    /// Pseudo-inverse filter; bins with |K_hat| <= tol are zeroed.
    Inverse {
        #[arg(long, default_value_t = 0.0)]
        tol: f64,
    },
    /// Tikhonov filter with a fixed or automatically selected mu.
    Tikhonov {
        #[arg(long, conflicts_with = "select", required_unless_present = "select")]
        mu: Option<f64>,
        #[arg(long, value_parser = parse_criterion)]
        select: Option<Criterion>,
    },
    /// Fourier-domain conjugate gradient.
    Cg {
        #[arg(long, conflicts_with = "discrepancy")]
        iters: Option<usize>,
        /// Stop by the discrepancy principle instead of a fixed count.
        #[arg(long)]
        discrepancy: bool,
        #[arg(long, default_value_t = crate::cg::DEFAULT_K_CAP)]
        k_cap: usize,
    },
}

impl MethodArgs {
    pub fn cg_iterations(iters: Option<usize>) -> usize {
        iters.unwrap_or(DEFAULT_ITERATIONS)
    }
}

fn parse_snr(s: &str) -> Result<f64, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        other => other
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("invalid SNR '{s}' (expected a number of dB or 'inf')")),
    }
}

fn parse_criterion(s: &str) -> Result<Criterion, String> {
    s.parse().map_err(|e: crate::Error| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_parsing() {
        assert_eq!(parse_snr("40").unwrap(), 40.0);
        assert_eq!(parse_snr("inf").unwrap(), f64::INFINITY);
        assert_eq!(parse_snr("INF").unwrap(), f64::INFINITY);
        assert!(parse_snr("nan").is_err());
        assert!(parse_snr("loud").is_err());
    }

    #[test]
    fn grammar() {
        let cli = Cli::try_parse_from([
            "deblur", "deblur", "--input", "a.pgm", "--out", "o", "tikhonov", "--select", "gcv",
        ])
        .unwrap();
        match cli.command {
            Command::Deblur { method: MethodArgs::Tikhonov { mu: None, select: Some(Criterion::Gcv) }, .. } => {}
            other => panic!("unexpected parse {other:?}"),
        }
        assert!(Cli::try_parse_from(["deblur", "deblur", "--out", "o", "tikhonov"]).is_err());
        assert!(Cli::try_parse_from([
            "deblur", "deblur", "--out", "o", "tikhonov", "--mu", "1", "--select", "gcv"
        ])
        .is_err());
        assert!(Cli::try_parse_from(["deblur", "deblur", "--out", "o", "cg", "--iters", "3", "--discrepancy"])
            .is_err());
        let cli = Cli::try_parse_from(["deblur", "simulate", "--input", "x", "--out", "o", "--snr", "inf"]).unwrap();
        match cli.command {
            Command::Simulate(c) => assert_eq!((c.snr, c.radius, c.seed), (f64::INFINITY, 15.0, 0)),
            other => panic!("unexpected parse {other:?}"),
        }
    }
}
