//! Implementations of the CLI commands.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use sqfluor::fitting::{
    fit_efficiency, fit_full_joint, fit_no_drive, fit_three_lorentzian, synthesize_trace,
    FitOptions, FitResult, GainSweepPoint, NoiseSpec, SyntheticModel,
};
use sqfluor::io::{read_job, read_trace, report_to_string, sha256_hex_file, Provenance};
use sqfluor::model::{bath_from_gain, ideal_moments_from_gain, AtomParams, GainPoint, SqueezedBath};
use sqfluor::spectra::{self, BackgroundModel};
use sqfluor::trace::{symmetric_grid, OffsetUnit, SpectrumTrace};
use sqfluor::validate::{equivalence_run, threshold_draw};

use crate::output::{table, RunDir};
use crate::CommonArgs;

/// Reference experimental constants used by the presets.
pub const GAMMA_HZ: f64 = 304e3;
pub const ETA_C: f64 = 0.81;
pub const ETA: f64 = 0.55;
/// Rabi amplitude of the driven measurements, in units of γ (1.2 MHz).
pub const RABI_DRIVEN: f64 = 1.2e6 / GAMMA_HZ;
/// Squeezing-source bandwidth in units of γ (21 MHz).
pub const SOURCE_BANDWIDTH: f64 = 21e6 / GAMMA_HZ;

/// Per-job results of a parallel sweep, keyed by input index.
type SweepResults<T> = Vec<(usize, Result<T, String>)>;

#[derive(Debug)]
pub enum RunError {
    /// Bad flags or configuration: exit code 2.
    Config(String),
    /// The run itself failed (fit, oracle, i/o): exit code 1.
    Validation(String),
}

fn config_err<E: std::fmt::Display>(e: E) -> RunError {
    RunError::Config(e.to_string())
}

fn run_err<E: std::fmt::Display>(e: E) -> RunError {
    RunError::Validation(e.to_string())
}

fn parse_grid(spec: &Option<String>) -> Result<Option<(f64, usize)>, RunError> {
    let Some(text) = spec else { return Ok(None) };
    let (span, points) = text
        .split_once(':')
        .ok_or_else(|| RunError::Config(format!("--grid expects SPAN:POINTS, got `{text}`")))?;
    let span: f64 = span
        .parse()
        .map_err(|e| RunError::Config(format!("bad grid span `{span}`: {e}")))?;
    let points: usize = points
        .parse()
        .map_err(|e| RunError::Config(format!("bad grid points `{points}`: {e}")))?;
    if span <= 0.0 || points < 2 {
        return Err(RunError::Config(format!("grid `{text}` out of range")));
    }
    Ok(Some((span, points)))
}

fn parse_format(format: &str) -> Result<OffsetUnit, RunError> {
    OffsetUnit::from_tag(format)
        .ok_or_else(|| RunError::Config(format!("--format must be `gamma` or `hz`, got `{format}`")))
}

fn attach_reference_metadata(trace: &mut SpectrumTrace, gain_db: Option<f64>, rabi: f64) {
    trace.metadata.gamma_hz = Some(GAMMA_HZ);
    trace.metadata.gain_db = gain_db;
    if rabi > 0.0 {
        trace.metadata.rabi_hz = Some(rabi * GAMMA_HZ);
    }
}

/// Efficiency that reproduces a target squeezing level at a given gain.
fn efficiency_for_squeezing_db(gain_db: f64, target_db: f64) -> f64 {
    let (n_ideal, m_ideal) = ideal_moments_from_gain(gain_db);
    let m_minus_n = 0.5 * (1.0 - 10f64.powf(-target_db / 10.0));
    m_minus_n / (m_ideal - n_ideal)
}

pub struct SimArgs {
    pub common: CommonArgs,
    pub config: Option<PathBuf>,
    pub preset: Option<String>,
    pub rabi: Option<f64>,
    pub gain_db: Option<f64>,
    pub eta: Option<f64>,
    pub eta_c: Option<f64>,
    pub phi: Vec<f64>,
    pub noise: f64,
}

struct SimPlan {
    bath_at: Box<dyn Fn(f64) -> Result<SqueezedBath, RunError>>,
    eta_c: f64,
    rabi: f64,
    background: BackgroundModel,
    driven: bool,
    gain_db: Option<f64>,
    label: String,
}

pub fn sim(args: SimArgs) -> Result<(), RunError> {
    let unit = parse_format(&args.common.format)?;
    let plan = if let Some(config_path) = &args.config {
        let job = read_job(config_path).map_err(config_err)?;
        let m = job.model.clone();
        let eta_c = m.eta_c;
        let background = match m.background.as_str() {
            "flat" => BackgroundModel::Flat,
            "filtered" => BackgroundModel::LorentzianFiltered {
                bandwidth: m.background_bandwidth.unwrap_or(SOURCE_BANDWIDTH),
            },
            "parabolic" => BackgroundModel::Parabolic {
                curvature: m.background_curvature.unwrap_or(0.001),
            },
            other => return Err(RunError::Config(format!("unknown background `{other}`"))),
        };
        let driven = m.kind == "full-analytic";
        let gain = m.gain_db;
        let bath_at: Box<dyn Fn(f64) -> Result<SqueezedBath, RunError>> = if let Some(n) = m.n {
            let mm = m.m.unwrap_or(0.0);
            Box::new(move |phi| SqueezedBath::new(n, mm, phi).map_err(config_err))
        } else {
            let gain_db = m.gain_db.expect("validated by schema");
            let eta = m.eta.unwrap_or(ETA);
            Box::new(move |phi| {
                let point = GainPoint::new(gain_db, eta).map_err(config_err)?;
                bath_from_gain(&point, phi).map_err(config_err)
            })
        };
        SimPlan {
            bath_at,
            eta_c,
            rabi: m.rabi,
            background,
            driven,
            gain_db: gain,
            label: format!("config:{}", config_path.display()),
        }
    } else {
        match args.preset.as_deref() {
            Some("vacuum-mollow") => SimPlan {
                bath_at: Box::new(|_| Ok(SqueezedBath::vacuum())),
                eta_c: args.eta_c.unwrap_or(1.0),
                rabi: args.rabi.unwrap_or(5.0),
                background: BackgroundModel::Flat,
                driven: true,
                gain_db: None,
                label: "preset:vacuum-mollow".to_string(),
            },
            Some("squeezed-no-drive") => {
                let gain_db = args.gain_db.unwrap_or(1.4);
                let eta = args.eta.unwrap_or(ETA);
                SimPlan {
                    bath_at: Box::new(move |phi| {
                        let point = GainPoint::new(gain_db, eta).map_err(config_err)?;
                        bath_from_gain(&point, phi).map_err(config_err)
                    }),
                    eta_c: args.eta_c.unwrap_or(ETA_C),
                    rabi: 0.0,
                    background: BackgroundModel::Flat,
                    driven: false,
                    gain_db: Some(gain_db),
                    label: "preset:squeezed-no-drive".to_string(),
                }
            }
            Some(other) => {
                return Err(RunError::Config(format!(
                    "unknown sim preset `{other}` (try vacuum-mollow or squeezed-no-drive)"
                )))
            }
            None => {
                return Err(RunError::Config(
                    "sim needs --config or --preset".to_string(),
                ))
            }
        }
    };

    let phases = if args.phi.is_empty() { vec![0.0] } else { args.phi.clone() };
    // Default grid: wide enough for every feature of the first phase's
    // spectrum; an explicit --grid overrides.
    let grid = match parse_grid(&args.common.grid)? {
        Some((span, points)) => symmetric_grid(span, points),
        None => {
            let bath = (plan.bath_at)(phases[0])?;
            let atom = AtomParams::new(1.0, plan.eta_c, plan.rabi).map_err(config_err)?;
            spectra::default_grid(&bath, &atom)
        }
    };
    let (span, points) = (grid.last().copied().unwrap_or(0.0), grid.len());
    let mut dir = RunDir::create(&args.common.out_dir)?;
    let mut perturbed_any = false;

    for (k, &phi) in phases.iter().enumerate() {
        let bath = (plan.bath_at)(phi)?;
        let atom = AtomParams::new(1.0, plan.eta_c, plan.rabi).map_err(config_err)?;
        if plan.driven {
            let probe = spectra::decompose(&bath, &atom).map_err(run_err)?;
            if probe.perturbed {
                perturbed_any = true;
                eprintln!("warning: near-degenerate resolvent roots at phi={phi}; drive nudged");
            }
        }
        let model = if plan.driven {
            SyntheticModel::FullAnalytic {
                bath,
                eta_c: plan.eta_c,
                rabi: plan.rabi,
                background: plan.background,
                scale: 1.0,
                offset: 0.0,
                curvature: 0.0,
            }
        } else {
            SyntheticModel::NoDrive {
                bath,
                eta_c: plan.eta_c,
                scale: 1.0,
                offset: 0.0,
                curvature: 0.0,
            }
        };
        let noise = NoiseSpec {
            sigma: args.noise,
            seed: args.common.seed.wrapping_add(k as u64),
        };
        let mut trace = synthesize_trace(&model, &noise, &grid).map_err(run_err)?;
        attach_reference_metadata(&mut trace, plan.gain_db, plan.rabi);
        dir.write_trace_file(&format!("trace_{k:03}.trace"), &trace, unit)?;
    }

    let header = vec![
        ("command".to_string(), "sim".to_string()),
        ("source".to_string(), plan.label),
        ("seed".to_string(), args.common.seed.to_string()),
        ("noise".to_string(), format!("{}", args.noise)),
        ("grid".to_string(), format!("{span}:{points}")),
        ("gamma_hz".to_string(), format!("{GAMMA_HZ}")),
        ("eta_c".to_string(), format!("{}", plan.eta_c)),
        ("rabi".to_string(), format!("{}", plan.rabi)),
        ("degeneracy_perturbed".to_string(), perturbed_any.to_string()),
    ];
    dir.finish(&header)
}

pub fn oracle_check(
    out_dir: Option<PathBuf>,
    sets: usize,
    seed: u64,
    tolerance: f64,
    corrupt: bool,
) -> Result<(), RunError> {
    if sets == 0 || tolerance <= 0.0 || tolerance.is_nan() {
        return Err(RunError::Config(format!(
            "need sets > 0 and tolerance > 0 (got {sets}, {tolerance})"
        )));
    }
    let report = equivalence_run(sets, seed, tolerance, corrupt).map_err(run_err)?;
    let mut text = format!("{report}");

    // The double-root corner: must evaluate (flagged) and still agree.
    let threshold = threshold_draw();
    let decomposition = spectra::decompose(&threshold.bath, &threshold.atom).map_err(run_err)?;
    let config = sqfluor::oracle::OracleConfig::for_params(&threshold.bath, &threshold.atom);
    let grid = symmetric_grid(6.0, 121);
    let numeric =
        sqfluor::oracle::spectrum_numeric(&threshold.bath, &threshold.atom, &grid, &config).map_err(run_err)?;
    let scale = numeric
        .values()
        .iter()
        .fold(f64::MIN_POSITIVE, |m, &v| m.max(v.abs()));
    let worst = grid
        .iter()
        .zip(numeric.values())
        .map(|(&w, &n)| (decomposition.sample(w) - n).abs())
        .fold(0.0f64, f64::max)
        / scale;
    let threshold_ok = worst <= tolerance;
    text.push_str(&format!(
        "threshold set: relative Linf = {worst:.3e}{}{}\n",
        if threshold_ok { " PASS" } else { " FAIL" },
        if decomposition.perturbed {
            " (warning: degeneracy perturbation applied)"
        } else {
            ""
        },
    ));

    print!("{text}");
    if let Some(dir) = out_dir {
        let mut run = RunDir::create(&dir)?;
        run.write_text("oracle_report.txt", &text)?;
        run.finish(&[
            ("command".to_string(), "oracle-check".to_string()),
            ("sets".to_string(), sets.to_string()),
            ("seed".to_string(), seed.to_string()),
            ("tolerance".to_string(), format!("{tolerance}")),
        ])?;
    }
    if report.passed() && threshold_ok {
        Ok(())
    } else {
        Err(RunError::Validation(
            "oracle equivalence suite failed".to_string(),
        ))
    }
}

/// Linewidth in the units of a trace's offsets, used to feed the fits.
fn gamma_in_trace_units(trace: &SpectrumTrace, override_hz: Option<f64>) -> Result<f64, RunError> {
    match trace.metadata.unit {
        OffsetUnit::Gamma => Ok(1.0),
        OffsetUnit::Hertz => override_hz
            .or(trace.metadata.gamma_hz)
            .ok_or_else(|| RunError::Config("hertz-unit trace needs gamma_hz (metadata or --gamma-hz)".to_string())),
    }
}

pub fn fit(
    common: CommonArgs,
    config: Option<PathBuf>,
    model: Option<String>,
    traces: Vec<PathBuf>,
    gamma_hz: Option<f64>,
    eta_c: Option<f64>,
    phase_offsets: Vec<f64>,
) -> Result<(), RunError> {
    let (kind, trace_paths, gamma_override, eta_c_override, offsets) = if let Some(path) = &config {
        let job = read_job(path).map_err(config_err)?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        let paths: Vec<PathBuf> = job.fit.traces.iter().map(|t| base.join(t)).collect();
        if paths.is_empty() {
            return Err(RunError::Config("fit config lists no traces".to_string()));
        }
        (
            job.model.kind.clone(),
            paths,
            job.fit.fix_gamma_hz,
            job.fit.fix_eta_c.or(Some(job.model.eta_c)),
            job.fit.phase_offsets.clone(),
        )
    } else {
        let kind = model.ok_or_else(|| RunError::Config("fit needs --config or --model".to_string()))?;
        if traces.is_empty() {
            return Err(RunError::Config("fit needs at least one --trace".to_string()));
        }
        (kind, traces, gamma_hz, eta_c, phase_offsets)
    };

    let mut loaded = Vec::new();
    for path in &trace_paths {
        let trace = read_trace(path).map_err(config_err)?;
        loaded.push((path.clone(), trace));
    }

    let mut dir = RunDir::create(&common.out_dir)?;
    let options = FitOptions::default();
    let mut all_converged = true;
    let mut provenance = Provenance::new(Some(common.seed));
    for (path, _) in &loaded {
        provenance.inputs.push((
            path.file_name().map(|n| n.to_string_lossy().to_string()).unwrap_or_default(),
            sha256_hex_file(path).map_err(run_err)?,
        ));
    }

    let write_one = |dir: &mut RunDir, name: &str, result: &FitResult| -> Result<(), RunError> {
        dir.write_text(name, &report_to_string(result, &provenance))?;
        Ok(())
    };

    match kind.as_str() {
        "no-drive" => {
            for (k, (path, trace)) in loaded.iter().enumerate() {
                let gamma = gamma_in_trace_units(trace, gamma_override)?;
                let eta_c = eta_c_override.or(trace.metadata.eta_c).unwrap_or(ETA_C);
                let result = fit_no_drive(trace, gamma, eta_c, &options).map_err(run_err)?;
                all_converged &= result.converged;
                println!(
                    "{}: M-N = {:.4} ± {:.4} ({} dB), converged = {}",
                    path.display(),
                    result.estimate("m_minus_n").unwrap_or(f64::NAN),
                    result.uncertainty("m_minus_n").unwrap_or(f64::NAN),
                    result
                        .estimate("squeezing_db")
                        .map(|v| format!("{v:.2}"))
                        .unwrap_or_default(),
                    result.converged
                );
                write_one(&mut dir, &format!("fit_report_{k:03}.txt"), &result)?;
            }
        }
        "three-lorentzian" => {
            for (k, (path, trace)) in loaded.iter().enumerate() {
                let result = fit_three_lorentzian(trace, &options).map_err(run_err)?;
                all_converged &= result.converged;
                println!(
                    "{}: center HWHM = {:.4}, sideband HWHM = {:.4}, converged = {}",
                    path.display(),
                    result.estimate("center_hwhm").unwrap_or(f64::NAN),
                    result.estimate("sideband_hwhm").unwrap_or(f64::NAN),
                    result.converged
                );
                write_one(&mut dir, &format!("fit_report_{k:03}.txt"), &result)?;
            }
        }
        "full-analytic" => {
            let offsets = if offsets.is_empty() {
                vec![0.0; loaded.len()]
            } else if offsets.len() == loaded.len() {
                offsets
            } else {
                return Err(RunError::Config(format!(
                    "got {} phase offsets for {} traces",
                    offsets.len(),
                    loaded.len()
                )));
            };
            let first = &loaded[0].1;
            let gamma = gamma_in_trace_units(first, gamma_override)?;
            let eta_c = eta_c_override.or(first.metadata.eta_c).unwrap_or(ETA_C);
            let traces_only: Vec<SpectrumTrace> = loaded.iter().map(|(_, t)| t.clone()).collect();
            let result = fit_full_joint(&traces_only, gamma, eta_c, &offsets, &options).map_err(run_err)?;
            all_converged &= result.converged;
            println!(
                "joint fit: M-N = {:.4} ± {:.4}, converged = {}",
                result.estimate("m_minus_n").unwrap_or(f64::NAN),
                result.uncertainty("m_minus_n").unwrap_or(f64::NAN),
                result.converged
            );
            write_one(&mut dir, "fit_report_joint.txt", &result)?;
        }
        other => {
            return Err(RunError::Config(format!(
                "unknown model kind `{other}` (no-drive, three-lorentzian, full-analytic)"
            )))
        }
    }

    dir.finish(&[
        ("command".to_string(), "fit".to_string()),
        ("model".to_string(), kind),
        ("seed".to_string(), common.seed.to_string()),
    ])?;
    if all_converged {
        Ok(())
    } else {
        Err(RunError::Validation("one or more fits did not converge".to_string()))
    }
}

/// Strong-drive-limit synthetic generator for a phase sweep point.
fn limit_template(bath: &SqueezedBath, eta_c: f64, rabi: f64) -> SyntheticModel {
    let rates = sqfluor::model::rates_from_params(bath, &AtomParams::new(1.0, eta_c, rabi).unwrap());
    let side_hw = 0.5 * (rates.g_n + rates.g_minus);
    SyntheticModel::ThreeLorentzian {
        centers: [0.0, rabi, -rabi],
        half_widths: [rates.g_plus, side_hw, side_hw],
        heights: [
            eta_c / (4.0 * PI * rates.g_plus),
            eta_c / (8.0 * PI * side_hw),
            eta_c / (8.0 * PI * side_hw),
        ],
        background: [bath.n_photons() / (2.0 * PI * eta_c), 0.0, 0.0],
    }
}

struct PhasePoint {
    phi: f64,
    center_hwhm: f64,
    center_err: f64,
    sideband_hwhm: f64,
    sideband_err: f64,
    converged: bool,
}

pub struct PhaseSweepOutcome {
    pub rows: Vec<Vec<f64>>,
    pub summary: String,
    pub failures: usize,
}

/// Shared sweep engine; also used by `reproduce fig3`.
#[allow(clippy::too_many_arguments)]
pub fn run_phase_sweep(
    phases: &[f64],
    gain_db: f64,
    eta: f64,
    eta_c: f64,
    rabi: f64,
    noise: f64,
    seed: u64,
    full_model: bool,
    grid: &[f64],
    dir: Option<&mut RunDir>,
    unit: OffsetUnit,
) -> Result<PhaseSweepOutcome, RunError> {
    let point = GainPoint::new(gain_db, eta).map_err(config_err)?;
    let reference = bath_from_gain(&point, 0.0).map_err(config_err)?;
    let (n, m) = (reference.n_photons(), reference.m_mag());

    let jobs: Vec<(usize, f64)> = phases.iter().copied().enumerate().collect();
    let results: SweepResults<(PhasePoint, SpectrumTrace)> = jobs
        .par_iter()
        .map(|&(k, phi)| {
            let work = || -> Result<(PhasePoint, SpectrumTrace), String> {
                let bath = SqueezedBath::new(n, m, phi).map_err(|e| e.to_string())?;
                let model = if full_model {
                    SyntheticModel::FullAnalytic {
                        bath,
                        eta_c,
                        rabi,
                        background: BackgroundModel::Flat,
                        scale: 1.0,
                        offset: 0.0,
                        curvature: 0.0,
                    }
                } else {
                    limit_template(&bath, eta_c, rabi)
                };
                let spec = NoiseSpec {
                    sigma: noise,
                    seed: seed.wrapping_add(k as u64),
                };
                let mut trace = synthesize_trace(&model, &spec, grid).map_err(|e| e.to_string())?;
                attach_reference_metadata(&mut trace, Some(gain_db), rabi);
                trace.metadata.phi_rad = Some(phi);
                let fit = fit_three_lorentzian(&trace, &FitOptions::default()).map_err(|e| e.to_string())?;
                Ok((
                    PhasePoint {
                        phi,
                        center_hwhm: fit.estimate("center_hwhm").unwrap_or(f64::NAN),
                        center_err: fit.uncertainty("center_hwhm").unwrap_or(f64::NAN),
                        sideband_hwhm: fit.estimate("sideband_hwhm").unwrap_or(f64::NAN),
                        sideband_err: fit.uncertainty("sideband_hwhm").unwrap_or(f64::NAN),
                        converged: fit.converged,
                    },
                    trace,
                ))
            };
            (k, work())
        })
        .collect();

    let mut ordered: SweepResults<(PhasePoint, SpectrumTrace)> = results;
    ordered.sort_by_key(|(k, _)| *k);

    let mut rows = Vec::new();
    let mut points = Vec::new();
    let mut failures = 0usize;
    let mut dir = dir;
    for (k, item) in ordered {
        match item {
            Ok((point, trace)) => {
                if let Some(run) = dir.as_deref_mut() {
                    run.write_trace_file(&format!("phase_{k:03}.trace"), &trace, unit)?;
                }
                rows.push(vec![
                    point.phi,
                    point.center_hwhm,
                    point.center_err,
                    point.sideband_hwhm,
                    point.sideband_err,
                    if point.converged { 1.0 } else { 0.0 },
                ]);
                points.push(point);
            }
            Err(message) => {
                // Per-trace failures are collected; the sweep continues.
                eprintln!("warning: phase point {k} failed: {message}");
                failures += 1;
            }
        }
    }

    // Least-squares sinusoids w(Φ) = a + b cos 2Φ for both width series, and
    // agreement with the strong-drive width formulas.
    let sinusoid = |select: &dyn Fn(&PhasePoint) -> f64| -> (f64, f64) {
        let (mut s1, mut sc, mut sc2, mut sy, mut syc) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for p in &points {
            let c = (2.0 * p.phi).cos();
            let y = select(p);
            s1 += 1.0;
            sc += c;
            sc2 += c * c;
            sy += y;
            syc += y * c;
        }
        let det = s1 * sc2 - sc * sc;
        ((sy * sc2 - syc * sc) / det, (s1 * syc - sc * sy) / det)
    };
    let (a_c, b_c) = sinusoid(&|p| p.center_hwhm);
    let (a_s, b_s) = sinusoid(&|p| p.sideband_hwhm);
    let r_squared = |select: &dyn Fn(&PhasePoint) -> f64, predict: &dyn Fn(f64) -> f64| -> f64 {
        let mean = points.iter().map(select).sum::<f64>() / points.len() as f64;
        let ss_tot: f64 = points.iter().map(|p| (select(p) - mean).powi(2)).sum();
        let ss_res: f64 = points.iter().map(|p| (select(p) - predict(p.phi)).powi(2)).sum();
        1.0 - ss_res / ss_tot
    };
    let center_pred = |phi: f64| n + m * (2.0 * phi).cos() + 0.5;
    let side_pred = |phi: f64| 0.5 * (3.0 * n + 1.5 - m * (2.0 * phi).cos());
    let r2_center = r_squared(&|p| p.center_hwhm, &center_pred);
    let r2_side = r_squared(&|p| p.sideband_hwhm, &side_pred);
    let crossing = points.iter().any(|p| p.center_hwhm < 0.5) && points.iter().any(|p| p.center_hwhm > 0.5);

    let summary = format!(
        "# phase-sweep summary\n\
         center_sinusoid = {a_c:.6} + {b_c:.6} cos(2 phi)\n\
         sideband_sinusoid = {a_s:.6} + {b_s:.6} cos(2 phi)\n\
         out_of_phase = {}\n\
         r2_center_vs_prediction = {r2_center:.6}\n\
         r2_sideband_vs_prediction = {r2_side:.6}\n\
         center_crosses_vacuum_halfwidth = {crossing}\n\
         failed_points = {failures}\n",
        b_c * b_s < 0.0,
    );
    Ok(PhaseSweepOutcome { rows, summary, failures })
}

#[allow(clippy::too_many_arguments)]
pub fn sweep_phase(
    common: CommonArgs,
    phases: usize,
    gain_db: f64,
    eta: f64,
    eta_c: f64,
    rabi: f64,
    noise: f64,
    full_model: bool,
) -> Result<(), RunError> {
    if phases < 3 {
        return Err(RunError::Config(format!("need at least 3 phases, got {phases}")));
    }
    let unit = parse_format(&common.format)?;
    let (span, points) = parse_grid(&common.grid)?.unwrap_or((14.0, 1401));
    let grid = symmetric_grid(span, points);
    let phase_values: Vec<f64> = (0..phases).map(|k| PI * k as f64 / phases as f64).collect();
    let mut dir = RunDir::create(&common.out_dir)?;
    let outcome = run_phase_sweep(
        &phase_values,
        gain_db,
        eta,
        eta_c,
        rabi,
        noise,
        common.seed,
        full_model,
        &grid,
        Some(&mut dir),
        unit,
    )?;
    dir.write_text(
        "phase_widths.tsv",
        &table(
            &["phi_rad", "center_hwhm", "center_err", "sideband_hwhm", "sideband_err", "converged"],
            &outcome.rows,
        ),
    )?;
    dir.write_text("sinusoid_fit.txt", &outcome.summary)?;
    print!("{}", outcome.summary);
    dir.finish(&[
        ("command".to_string(), "sweep-phase".to_string()),
        ("failed_points".to_string(), outcome.failures.to_string()),
        ("gain_db".to_string(), format!("{gain_db}")),
        ("eta".to_string(), format!("{eta}")),
        ("eta_c".to_string(), format!("{eta_c}")),
        ("rabi".to_string(), format!("{rabi}")),
        ("noise".to_string(), format!("{noise}")),
        ("seed".to_string(), common.seed.to_string()),
        ("phases".to_string(), phases.to_string()),
        ("generator".to_string(), if full_model { "full-analytic" } else { "strong-drive-limit" }.to_string()),
    ])
}

pub struct GainSweepOutcome {
    pub rows: Vec<Vec<f64>>,
    pub efficiency: FitResult,
}

#[allow(clippy::too_many_arguments)]
pub fn run_gain_sweep(
    gains: &[f64],
    eta: f64,
    eta_c: f64,
    noise: f64,
    seed: u64,
    grid: &[f64],
    dir: Option<&mut RunDir>,
    unit: OffsetUnit,
) -> Result<GainSweepOutcome, RunError> {
    let jobs: Vec<(usize, f64)> = gains.iter().copied().enumerate().collect();
    let results: SweepResults<(f64, f64, f64, SpectrumTrace)> = jobs
        .par_iter()
        .map(|&(k, gain_db)| {
            let work = || -> Result<(f64, f64, f64, SpectrumTrace), String> {
                let point = GainPoint::new(gain_db, eta).map_err(|e| e.to_string())?;
                let bath = bath_from_gain(&point, 0.0).map_err(|e| e.to_string())?;
                let model = SyntheticModel::NoDrive {
                    bath,
                    eta_c,
                    scale: 1.0,
                    offset: 0.0,
                    curvature: 0.0,
                };
                let spec = NoiseSpec {
                    sigma: noise,
                    seed: seed.wrapping_add(k as u64),
                };
                let mut trace = synthesize_trace(&model, &spec, grid).map_err(|e| e.to_string())?;
                attach_reference_metadata(&mut trace, Some(gain_db), 0.0);
                let fit = fit_no_drive(&trace, 1.0, eta_c, &FitOptions::default()).map_err(|e| e.to_string())?;
                if !fit.converged {
                    return Err("fit did not converge".to_string());
                }
                Ok((
                    gain_db,
                    fit.estimate("m_minus_n").unwrap_or(f64::NAN),
                    fit.uncertainty("m_minus_n").unwrap_or(f64::NAN),
                    trace,
                ))
            };
            (k, work())
        })
        .collect();

    let mut ordered = results;
    ordered.sort_by_key(|(k, _)| *k);
    let mut rows = Vec::new();
    let mut sweep_points = Vec::new();
    let mut dir = dir;
    for (k, item) in ordered {
        match item {
            Ok((gain_db, diff, err, trace)) => {
                if let Some(run) = dir.as_deref_mut() {
                    run.write_trace_file(&format!("gain_{k:03}.trace"), &trace, unit)?;
                }
                let (n_ideal, m_ideal) = ideal_moments_from_gain(gain_db);
                rows.push(vec![gain_db, diff, err, eta * (m_ideal - n_ideal)]);
                sweep_points.push(GainSweepPoint {
                    gain_db,
                    m_minus_n: diff,
                    uncertainty: err,
                });
            }
            Err(message) => {
                eprintln!("warning: gain point {k} failed: {message}");
            }
        }
    }
    let efficiency = fit_efficiency(&sweep_points, &FitOptions::default()).map_err(run_err)?;
    Ok(GainSweepOutcome { rows, efficiency })
}

pub fn sweep_gain(
    common: CommonArgs,
    gains: Vec<f64>,
    eta: f64,
    eta_c: f64,
    noise: f64,
) -> Result<(), RunError> {
    if gains.len() < 3 {
        return Err(RunError::Config(format!("need at least 3 gains, got {}", gains.len())));
    }
    let unit = parse_format(&common.format)?;
    let (span, points) = parse_grid(&common.grid)?.unwrap_or((8.0, 2001));
    let grid = symmetric_grid(span, points);
    let mut dir = RunDir::create(&common.out_dir)?;
    let outcome = run_gain_sweep(&gains, eta, eta_c, noise, common.seed, &grid, Some(&mut dir), unit)?;
    dir.write_text(
        "gain_sweep.tsv",
        &table(&["gain_db", "m_minus_n", "uncertainty", "truth"], &outcome.rows),
    )?;
    let provenance = Provenance::new(Some(common.seed));
    dir.write_text("efficiency_report.txt", &report_to_string(&outcome.efficiency, &provenance))?;
    println!(
        "fitted efficiency = {:.4} ± {:.4}",
        outcome.efficiency.estimate("eta").unwrap_or(f64::NAN),
        outcome.efficiency.uncertainty("eta").unwrap_or(f64::NAN)
    );
    dir.finish(&[
        ("command".to_string(), "sweep-gain".to_string()),
        ("eta".to_string(), format!("{eta}")),
        ("eta_c".to_string(), format!("{eta_c}")),
        ("noise".to_string(), format!("{noise}")),
        ("seed".to_string(), common.seed.to_string()),
    ])
}

pub fn reproduce(common: CommonArgs, preset: &str, phi: Vec<f64>) -> Result<(), RunError> {
    let unit = parse_format(&common.format)?;
    match preset {
        "fig2a" => {
            // Undriven spectrum at 1.4 dB gain. The trace is generated at
            // the per-point efficiency implied by the reported 2.4 dB of
            // squeezing for these conditions; the sweep-level constant is
            // eta = 0.55.
            let (span, points) = parse_grid(&common.grid)?.unwrap_or((8.0, 2001));
            let grid = symmetric_grid(span, points);
            let eta_point = efficiency_for_squeezing_db(1.4, 2.4);
            let point = GainPoint::new(1.4, eta_point).map_err(config_err)?;
            let bath = bath_from_gain(&point, 0.0).map_err(config_err)?;
            let model = SyntheticModel::NoDrive {
                bath,
                eta_c: ETA_C,
                scale: 1.0,
                offset: 0.0,
                curvature: 0.0,
            };
            let spec = NoiseSpec {
                sigma: 0.01,
                seed: common.seed.wrapping_add(7),
            };
            let mut trace = synthesize_trace(&model, &spec, &grid).map_err(run_err)?;
            attach_reference_metadata(&mut trace, Some(1.4), 0.0);
            trace.metadata.normalization = Some("background-zero".to_string());
            let fit = fit_no_drive(&trace, 1.0, ETA_C, &FitOptions::default()).map_err(run_err)?;
            let mut dir = RunDir::create(&common.out_dir)?;
            dir.write_trace_file("fig2a.trace", &trace, unit)?;
            let mut provenance = Provenance::new(Some(common.seed));
            provenance.inputs.push(("fig2a.trace".to_string(), String::new()));
            dir.write_text("fig2a_fit.txt", &report_to_string(&fit, &provenance))?;
            println!(
                "fig2a: gamma_y = {:.4} gamma ({:.2} dB of squeezing)",
                fit.estimate("gamma_y").unwrap_or(f64::NAN),
                fit.estimate("squeezing_db").unwrap_or(f64::NAN)
            );
            dir.finish(&[
                ("command".to_string(), "reproduce".to_string()),
                ("preset".to_string(), "fig2a".to_string()),
                ("gamma_hz".to_string(), format!("{GAMMA_HZ}")),
                ("eta_c".to_string(), format!("{ETA_C}")),
                ("eta_sweep".to_string(), format!("{ETA}")),
                ("eta_point".to_string(), format!("{eta_point:.6}")),
                ("gain_db".to_string(), "1.4".to_string()),
                ("seed".to_string(), common.seed.to_string()),
            ])
        }
        "fig3" => {
            // Driven triplet at 1.5 dB for a pair of phases: center line
            // supernatural when the drive rides the amplified quadrature,
            // subnatural a quarter period away.
            let phases = if phi.is_empty() { vec![0.0, PI / 2.0] } else { phi };
            let (span, points) = parse_grid(&common.grid)?.unwrap_or((14.0, 1401));
            let grid = symmetric_grid(span, points);
            let mut dir = RunDir::create(&common.out_dir)?;
            let outcome = run_phase_sweep(
                &phases,
                1.5,
                ETA,
                ETA_C,
                RABI_DRIVEN,
                0.01,
                common.seed,
                true,
                &grid,
                Some(&mut dir),
                unit,
            )?;
            dir.write_text(
                "fig3_widths.tsv",
                &table(
                    &["phi_rad", "center_hwhm", "center_err", "sideband_hwhm", "sideband_err", "converged"],
                    &outcome.rows,
                ),
            )?;
            for row in &outcome.rows {
                println!(
                    "fig3: phi = {:.4}, center HWHM = {:.4} gamma ({})",
                    row[0],
                    row[1],
                    if row[1] < 0.5 { "subnatural" } else { "supernatural" }
                );
            }
            dir.finish(&[
                ("command".to_string(), "reproduce".to_string()),
                ("preset".to_string(), "fig3".to_string()),
                ("gamma_hz".to_string(), format!("{GAMMA_HZ}")),
                ("eta_c".to_string(), format!("{ETA_C}")),
                ("eta".to_string(), format!("{ETA}")),
                ("gain_db".to_string(), "1.5".to_string()),
                ("rabi".to_string(), format!("{RABI_DRIVEN}")),
                ("seed".to_string(), common.seed.to_string()),
            ])
        }
        "fig4" => {
            let gains = vec![0.5, 1.0, 1.5, 2.5, 3.5, 4.5, 5.5, 6.6];
            let (span, points) = parse_grid(&common.grid)?.unwrap_or((8.0, 2001));
            let grid = symmetric_grid(span, points);
            let mut dir = RunDir::create(&common.out_dir)?;
            let outcome = run_gain_sweep(&gains, ETA, ETA_C, 0.01, common.seed, &grid, Some(&mut dir), unit)?;
            dir.write_text(
                "gain_sweep.tsv",
                &table(&["gain_db", "m_minus_n", "uncertainty", "truth"], &outcome.rows),
            )?;
            let provenance = Provenance::new(Some(common.seed));
            dir.write_text(
                "efficiency_report.txt",
                &report_to_string(&outcome.efficiency, &provenance),
            )?;
            println!(
                "fig4: fitted efficiency = {:.4} ± {:.4}",
                outcome.efficiency.estimate("eta").unwrap_or(f64::NAN),
                outcome.efficiency.uncertainty("eta").unwrap_or(f64::NAN)
            );
            dir.finish(&[
                ("command".to_string(), "reproduce".to_string()),
                ("preset".to_string(), "fig4".to_string()),
                ("gamma_hz".to_string(), format!("{GAMMA_HZ}")),
                ("eta_c".to_string(), format!("{ETA_C}")),
                ("eta".to_string(), format!("{ETA}")),
                ("seed".to_string(), common.seed.to_string()),
            ])
        }
        "fig6" => {
            // Four driven spectra at 6.6 dB near the center-narrowing phase,
            // jointly fit with shared physics and per-trace backgrounds.
            let base = 0.40 * PI;
            let offsets = [0.0, 0.08 * PI, 0.18 * PI, 0.30 * PI];
            let (span, points) = parse_grid(&common.grid)?.unwrap_or((12.0, 1601));
            let grid = symmetric_grid(span, points);
            let gain = GainPoint::new(6.6, ETA).map_err(config_err)?;
            let reference = bath_from_gain(&gain, base).map_err(config_err)?;
            let mut dir = RunDir::create(&common.out_dir)?;
            let mut traces = Vec::new();
            for (k, &offset) in offsets.iter().enumerate() {
                let bath = SqueezedBath::new(
                    reference.n_photons(),
                    reference.m_mag(),
                    base + offset,
                )
                .map_err(config_err)?;
                let model = SyntheticModel::FullAnalytic {
                    bath,
                    eta_c: ETA_C,
                    rabi: RABI_DRIVEN,
                    background: BackgroundModel::LorentzianFiltered {
                        bandwidth: SOURCE_BANDWIDTH,
                    },
                    scale: 1.0,
                    offset: 0.0,
                    curvature: 0.0,
                };
                let spec = NoiseSpec {
                    sigma: 0.01,
                    seed: common.seed.wrapping_add(50 + k as u64),
                };
                let mut trace = synthesize_trace(&model, &spec, &grid).map_err(run_err)?;
                attach_reference_metadata(&mut trace, Some(6.6), RABI_DRIVEN);
                trace.metadata.phi_rad = Some(base + offset);
                dir.write_trace_file(&format!("fig6_{k:03}.trace"), &trace, unit)?;
                traces.push(trace);
            }
            let fit = fit_full_joint(&traces, 1.0, ETA_C, &offsets, &FitOptions::default()).map_err(run_err)?;
            let provenance = Provenance::new(Some(common.seed));
            dir.write_text("fig6_fit.txt", &report_to_string(&fit, &provenance))?;
            println!(
                "fig6: M-N = {:.4} ± {:.4}",
                fit.estimate("m_minus_n").unwrap_or(f64::NAN),
                fit.uncertainty("m_minus_n").unwrap_or(f64::NAN)
            );
            dir.finish(&[
                ("command".to_string(), "reproduce".to_string()),
                ("preset".to_string(), "fig6".to_string()),
                ("gamma_hz".to_string(), format!("{GAMMA_HZ}")),
                ("eta_c".to_string(), format!("{ETA_C}")),
                ("eta".to_string(), format!("{ETA}")),
                ("gain_db".to_string(), "6.6".to_string()),
                ("rabi".to_string(), format!("{RABI_DRIVEN}")),
                ("source_bandwidth".to_string(), format!("{SOURCE_BANDWIDTH}")),
                ("seed".to_string(), common.seed.to_string()),
            ])
        }
        other => Err(RunError::Config(format!(
            "unknown preset `{other}` (fig2a, fig3, fig4, fig6)"
        ))),
    }
}
