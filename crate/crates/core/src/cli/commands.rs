use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use super::output::{format_float, save_pgm, save_raw, write_csv, write_json};
use super::{Cli, Command, CommonArgs, MethodArgs};
use crate::cg::{CgStop, CgTrace};
use crate::direct::{log_grid, Criterion, MuSelection, SelectorInputs, SpectralProblem, ValueSource};
use crate::fourier::dft2;
use crate::image::{frobenius_norm, read_pgm, read_raw, Image, Spectrum};
use crate::metrics::{relative_error, DeblurReport, Method, Parameter};
use crate::simulate::{add_gaussian_noise, blur, disk_psf, NoiseRealization, Psf};

/// Everything a restoration command needs, either simulated or loaded.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub truth: Option<Image>,
    pub blurred: Option<Image>,
    pub observed: Image,
    pub psf: Psf,
    pub noise: Option<NoiseRealization>,
    pub energy: Option<f64>,
    pub epsilon: Option<f64>,
    pub energy_source: ValueSource,
    pub epsilon_source: ValueSource,
}

impl Scenario {
    pub fn selector_inputs(&self) -> Result<SelectorInputs> {
        Ok(SelectorInputs {
            energy: self.energy.ok_or_else(|| anyhow!("prescribed energy unknown: pass --input, --noise or --energy"))?,
            epsilon: self
                .epsilon
                .ok_or_else(|| anyhow!("prescribed discrepancy unknown: pass --noise or --epsilon"))?,
            energy_source: self.energy_source,
            epsilon_source: self.epsilon_source,
        })
    }

    fn require_truth(&self) -> Result<&Image> {
        self.truth.as_ref().ok_or_else(|| anyhow!("this command needs the true image (--input)"))
    }

    fn error_of(&self, img: &Image) -> Result<Option<f64>> {
        self.truth.as_ref().map(|t| relative_error(img, t)).transpose().map_err(Into::into)
    }
}

fn read_image(path: &Path) -> Result<Image> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let is_raw = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("raw"));
    let img = if is_raw { read_raw(&bytes) } else { read_pgm(&bytes) };
    img.with_context(|| format!("decoding {}", path.display()))
}

fn read_noise_json(path: &Path) -> Result<(Option<f64>, Option<f64>)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok((v.get("energy").and_then(Value::as_f64), v.get("realized_norm").and_then(Value::as_f64)))
}

/// Builds the scenario described by the common flags.
pub fn load_scenario(args: &CommonArgs) -> Result<Scenario> {
    let truth = args.input.as_deref().map(read_image).transpose()?;

    let mut scenario = match &args.observed {
        Some(path) => {
            let observed = read_image(path)?;
            let psf = match &args.psf {
                Some(p) => Psf::from_kernel(read_image(p)?).context("loading PSF")?,
                None => disk_psf(observed.rows(), observed.cols(), args.radius)?,
            };
            let (mut energy, epsilon) = match &args.noise {
                Some(p) => read_noise_json(p)?,
                None => (None, None),
            };
            if energy.is_none() {
                energy = truth.as_ref().map(frobenius_norm);
            }
            Scenario {
                truth,
                blurred: None,
                observed,
                psf,
                noise: None,
                energy,
                epsilon,
                energy_source: ValueSource::GroundTruth,
                epsilon_source: ValueSource::GroundTruth,
            }
        }
        None => {
            let truth = truth.ok_or_else(|| anyhow!("--input is required unless --observed is given"))?;
            let psf = disk_psf(truth.rows(), truth.cols(), args.radius)?;
            let blurred = blur(&truth, &psf)?;
            let (observed, noise) = add_gaussian_noise(&blurred, args.snr, args.seed)?;
            Scenario {
                energy: Some(frobenius_norm(&truth)),
                epsilon: Some(noise.realized_norm),
                truth: Some(truth),
                blurred: Some(blurred),
                observed,
                psf,
                noise: Some(noise),
                energy_source: ValueSource::GroundTruth,
                epsilon_source: ValueSource::GroundTruth,
            }
        }
    };

    if let Some(e) = args.energy {
        scenario.energy = Some(e);
        scenario.energy_source = ValueSource::UserOverride;
    }
    if let Some(e) = args.epsilon {
        scenario.epsilon = Some(e);
        scenario.epsilon_source = ValueSource::UserOverride;
    }
    Ok(scenario)
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

/// Executes a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(common) => simulate(&common),
        Command::Deblur { common, timing, method } => deblur(&common, &method, timing),
        Command::SweepMu { common, mu_min, mu_max, mu_points, save_images } => {
            sweep_mu(&common, mu_min, mu_max, mu_points, save_images)
        }
        Command::SweepIters { common, k_max } => sweep_iters(&common, k_max),
        Command::Compare { common, k_cap } => compare(&common, k_cap),
    }
}

fn snr_value(snr_db: f64) -> Value {
    if snr_db.is_finite() {
        json!(snr_db)
    } else {
        json!("inf")
    }
}

fn simulate(args: &CommonArgs) -> Result<()> {
    if args.observed.is_some() {
        bail!("simulate takes the true image via --input, not --observed");
    }
    let sc = load_scenario(args)?;
    prepare_out(&args.out)?;
    let blurred = sc.blurred.as_ref().expect("simulated scenario has a blurred image");
    let noise = sc.noise.expect("simulated scenario has a noise record");

    save_pgm(&args.out.join("blurred.pgm"), blurred)?;
    save_pgm(&args.out.join("blurred_noisy.pgm"), &sc.observed)?;
    save_raw(&args.out.join("psf.raw"), sc.psf.image())?;
    let meta = json!({
        "sigma": noise.sigma,
        "seed": noise.seed,
        "realized_norm": noise.realized_norm,
        "energy": sc.energy,
        "snr_db": snr_value(noise.snr_db),
        "radius": args.radius,
        "rows": sc.observed.rows(),
        "cols": sc.observed.cols(),
    });
    write_json(&args.out.join("noise.json"), &meta)?;
    println!(
        "simulated {}x{} radius {} snr {} dB: sigma {:.4e}, epsilon {:.6e}",
        sc.observed.rows(),
        sc.observed.cols(),
        args.radius,
        noise.snr_db,
        noise.sigma,
        noise.realized_norm
    );
    Ok(())
}

fn residual_of(problem: &SpectralProblem, restored: &Image) -> f64 {
    // ||A f - g|| evaluated spectrally from the restored image
    let fhat = dft2(restored);
    let khat = problem.transfer();
    let ghat = problem.observation();
    let sum: f64 = fhat
        .data()
        .iter()
        .zip(khat.data())
        .zip(ghat.data())
        .map(|((f, k), g)| (k * f - g).norm_sqr())
        .sum();
    (sum / problem.pixels() as f64).sqrt()
}

fn deblur(args: &CommonArgs, method: &MethodArgs, timing: bool) -> Result<()> {
    let sc = load_scenario(args)?;
    prepare_out(&args.out)?;
    let start = Instant::now();
    let problem = SpectralProblem::new(&sc.observed, &sc.psf)?;

    let (restored, parameter, method_tag, selection, trace) = match *method {
        MethodArgs::Inverse { tol } => {
            (problem.pseudo_inverse(tol)?, Parameter::Tolerance(tol), Method::PseudoInverse, None, None)
        }
        MethodArgs::Tikhonov { mu, select } => {
            let (mu, criterion, selection) = match (mu, select) {
                (Some(mu), _) => (mu, "manual", None),
                (None, Some(c)) => {
                    let inputs = if c == Criterion::Gcv { None } else { Some(sc.selector_inputs()?) };
                    let sel = match inputs {
                        Some(inputs) => problem.select(c, &inputs)?,
                        None => problem.select_gcv()?,
                    };
                    (sel.mu, c.as_str(), Some(sel))
                }
                (None, None) => bail!("tikhonov needs --mu or --select"),
            };
            (problem.tikhonov(mu)?, Parameter::Mu { value: mu, criterion }, Method::Tikhonov, selection, None)
        }
        MethodArgs::Cg { iters, discrepancy, k_cap } => {
            let stop = if discrepancy {
                CgStop::Discrepancy { epsilon: sc.selector_inputs()?.epsilon, k_cap }
            } else {
                CgStop::Fixed(MethodArgs::cg_iterations(iters))
            };
            let truth_hat = sc.truth.as_ref().map(dft2);
            let (img, trace) = problem.cg(stop, truth_hat.as_ref())?;
            let criterion = if discrepancy { "discrepancy" } else { "fixed" };
            let param = Parameter::Iterations { value: trace.iterations(), criterion };
            (img, param, Method::Cg, None, Some(trace))
        }
    };

    let report = DeblurReport {
        method: method_tag,
        relative_error: sc.error_of(&restored)?,
        residual_norm: residual_of(&problem, &restored),
        wall_time: start.elapsed().as_secs_f64(),
        parameter,
        selection,
        trace,
    };

    save_pgm(&args.out.join("restored.pgm"), &restored)?;
    write_json(&args.out.join("report.json"), &report.to_flat_json(timing))?;
    if let Some(trace) = &report.trace {
        write_trace_csv(&args.out.join("trace.csv"), trace)?;
    }

    let err = report.relative_error.map_or("n/a".to_string(), |e| format!("{:.2}%", 100.0 * e));
    println!(
        "{} ({} = {}): relative error {err}, residual {:.6e}",
        report.method.as_str(),
        report.parameter.criterion(),
        format_float(report.parameter.value()),
        report.residual_norm
    );
    eprintln!("wall time {:.3} s", report.wall_time);
    Ok(())
}

fn write_trace_csv(path: &Path, trace: &CgTrace) -> Result<()> {
    let opt = |v: Option<f64>| v.map_or(String::new(), format_float);
    let rows: Vec<Vec<String>> = trace
        .records
        .iter()
        .map(|r| {
            vec![
                r.k.to_string(),
                format_float(r.residual_norm),
                format_float(r.solution_norm),
                format_float(r.normal_residual),
                opt(r.relative_error),
                opt(r.alpha),
                opt(r.beta),
            ]
        })
        .collect();
    write_csv(
        path,
        &["k", "residual_norm", "solution_norm", "normal_residual", "relative_error", "alpha", "beta"],
        &rows,
    )
}

fn sweep_mu(args: &CommonArgs, mu_min: f64, mu_max: f64, points: usize, save_images: bool) -> Result<()> {
    if points == 0 {
        bail!("--mu-points must be at least 1");
    }
    if !(mu_min > 0.0 && mu_max >= mu_min) {
        bail!("mu grid needs 0 < mu-min <= mu-max");
    }
    let sc = load_scenario(args)?;
    let truth = sc.require_truth()?;
    prepare_out(&args.out)?;
    let problem = SpectralProblem::new(&sc.observed, &sc.psf)?;
    let grid = log_grid(mu_min, mu_max, points);

    // collect() keeps grid order regardless of completion order
    let results: Vec<(f64, f64, f64, f64, Image)> = grid
        .par_iter()
        .map(|&mu| -> Result<_> {
            let restored = problem.tikhonov(mu)?;
            let (sol, res) = problem.tikhonov_norms(mu)?;
            Ok((mu, relative_error(&restored, truth)?, res, sol, restored))
        })
        .collect::<Result<_>>()?;

    if save_images {
        for (i, (_, _, _, _, img)) in results.iter().enumerate() {
            save_pgm(&args.out.join(format!("mu_{i:03}.pgm")), img)?;
        }
    }
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|(mu, err, res, sol, _)| vec![format_float(*mu), format_float(*err), format_float(*res), format_float(*sol)])
        .collect();
    write_csv(&args.out.join("sweep_mu.csv"), &["mu", "relative_error", "residual_norm", "solution_norm"], &rows)?;

    let best = results.iter().min_by(|a, b| a.1.total_cmp(&b.1)).expect("grid is nonempty");
    println!("sweep-mu: {} points, best mu {} with relative error {:.2}%", points, format_float(best.0), 100.0 * best.1);
    Ok(())
}

fn sweep_iters(args: &CommonArgs, k_max: usize) -> Result<()> {
    let sc = load_scenario(args)?;
    let truth = sc.require_truth()?;
    prepare_out(&args.out)?;
    let problem = SpectralProblem::new(&sc.observed, &sc.psf)?;
    let (_, trace) = problem.cg(CgStop::Fixed(k_max), Some(&dft2(truth)))?;

    let rows: Vec<Vec<String>> = trace
        .records
        .iter()
        .map(|r| {
            vec![
                r.k.to_string(),
                format_float(r.relative_error.expect("truth supplied")),
                format_float(r.residual_norm),
            ]
        })
        .collect();
    write_csv(&args.out.join("sweep_k.csv"), &["k", "relative_error", "residual_norm"], &rows)?;

    let best = trace
        .records
        .iter()
        .min_by(|a, b| a.relative_error.unwrap_or(f64::INFINITY).total_cmp(&b.relative_error.unwrap_or(f64::INFINITY)))
        .expect("trace holds k = 0");
    println!(
        "sweep-iters: {} iterations, best k {} with relative error {:.2}%",
        trace.iterations(),
        best.k,
        100.0 * best.relative_error.unwrap_or(f64::NAN)
    );
    Ok(())
}

/// One row of the comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub method: String,
    pub parameter: f64,
    pub relative_error: f64,
}

fn compare(args: &CommonArgs, k_cap: usize) -> Result<()> {
    let sc = load_scenario(args)?;
    let truth = sc.require_truth()?;
    let inputs = sc.selector_inputs()?;
    prepare_out(&args.out)?;
    let problem = SpectralProblem::new(&sc.observed, &sc.psf)?;

    let mut rows = Vec::new();
    let mut meta = Map::new();
    let mut selections: Vec<MuSelection> = Vec::new();
    for criterion in Criterion::ALL {
        let sel = problem.select(criterion, &inputs)?;
        let err = relative_error(&problem.tikhonov(sel.mu)?, truth)?;
        let key = criterion.as_str();
        meta.insert(format!("{key}_mu"), json!(sel.mu));
        meta.insert(format!("{key}_relative_error"), json!(err));
        meta.insert(format!("{key}_converged"), json!(sel.converged));
        meta.insert(format!("{key}_evaluations"), json!(sel.evaluations));
        rows.push(CompareRow { method: format!("tikhonov-{key}"), parameter: sel.mu, relative_error: err });
        selections.push(sel);
    }

    let truth_hat: Spectrum = dft2(truth);
    let (cg_img, trace) = problem.cg(CgStop::Discrepancy { epsilon: inputs.epsilon, k_cap }, Some(&truth_hat))?;
    let cg_err = relative_error(&cg_img, truth)?;
    meta.insert("cg_discrepancy_iterations".into(), json!(trace.iterations()));
    meta.insert("cg_discrepancy_relative_error".into(), json!(cg_err));
    rows.push(CompareRow {
        method: "cg-discrepancy".into(),
        parameter: trace.iterations() as f64,
        relative_error: cg_err,
    });

    let pinv_err = relative_error(&problem.pseudo_inverse(0.0)?, truth)?;
    meta.insert("pseudo_inverse_relative_error".into(), json!(pinv_err));
    meta.insert("energy".into(), json!(inputs.energy));
    meta.insert("epsilon".into(), json!(inputs.epsilon));
    meta.insert("radius".into(), json!(args.radius));
    meta.insert("seed".into(), json!(args.seed));
    meta.insert("snr_db".into(), snr_value(args.snr));

    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let param = if r.method.starts_with("cg") {
                format!("{}", r.parameter as usize)
            } else {
                format_float(r.parameter)
            };
            vec![r.method.clone(), param, format_float(r.relative_error)]
        })
        .collect();
    write_csv(&args.out.join("table.csv"), &["method", "parameter", "relative_error"], &csv_rows)?;
    write_json(&args.out.join("compare.json"), &Value::Object(meta))?;

    for r in &rows {
        println!("{:<22} {:>12}  {:6.2}%", r.method, format_float(r.parameter), 100.0 * r.relative_error);
    }
    println!("{:<22} {:>12}  {:6.2}%", "pseudo-inverse", "tol=0", 100.0 * pinv_err);
    Ok(())
}
