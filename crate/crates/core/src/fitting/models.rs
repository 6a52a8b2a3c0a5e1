//! Concrete fit models and the synthetic-trace generator.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::lm::{minimize, LmOptions, ParamMap};
use super::{FitError, FitWarning};
use crate::model::{AtomParams, SqueezedBath};
use crate::spectra::reflection_values;
use crate::trace::{OffsetUnit, SpectrumTrace, TraceMetadata};

/// Result of a least-squares fit: named estimates, their standard errors,
/// the covariance of the fit parameters (rows ordered as `param_names`), and
/// convergence diagnostics.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub estimates: BTreeMap<String, f64>,
    pub uncertainties: BTreeMap<String, f64>,
    pub param_names: Vec<String>,
    pub covariance: DMatrix<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub warnings: Vec<FitWarning>,
}

impl FitResult {
    pub fn estimate(&self, name: &str) -> Option<f64> {
        self.estimates.get(name).copied()
    }

    pub fn uncertainty(&self, name: &str) -> Option<f64> {
        self.uncertainties.get(name).copied()
    }
}

/// Internal coordinates for the undriven fit; both reach the same optimum
/// and exist to check exactly that.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoDriveCoords {
    /// (N, r) with M = r sqrt(N(N+1)), r ∈ [0, 1]: physical by construction.
    #[default]
    NRatio,
    /// (N, M) with the positivity bound enforced as a feasibility wall.
    NM,
}

#[derive(Debug, Clone, Default)]
pub struct FitOptions {
    pub lm: LmOptions,
    /// Per-point standard deviations (full trace length); uniform if absent.
    pub weights: Option<Vec<f64>>,
    /// Named overrides for the initialization heuristic.
    pub initial: BTreeMap<String, f64>,
    pub no_drive_coords: NoDriveCoords,
}

fn m_from_ratio(n: f64, r: f64) -> f64 {
    r * (n * (n + 1.0)).sqrt()
}

/// Residuals over the physical parameters; `None` marks infeasibility.
type BoxedResiduals<'a> = Box<dyn Fn(&[f64]) -> Option<Vec<f64>> + 'a>;

/// Generic driver: squash physical parameters into unconstrained internal
/// coordinates, run the optimizer, and map the covariance back.
struct Problem<'a> {
    names: Vec<String>,
    maps: Vec<ParamMap>,
    init: Vec<f64>,
    residuals: BoxedResiduals<'a>,
}

fn run(problem: Problem, lm: &LmOptions) -> Result<(Vec<f64>, FitResult), FitError> {
    let maps = problem.maps.clone();
    let u0: Vec<f64> = problem
        .init
        .iter()
        .zip(&maps)
        .map(|(p, map)| map.inverse(*p))
        .collect();
    let res_fn = problem.residuals;
    let wrapped = move |u: &[f64]| -> Option<Vec<f64>> {
        let p: Vec<f64> = u.iter().zip(&maps).map(|(u, map)| map.forward(*u)).collect();
        res_fn(&p)
    };
    let outcome = minimize(&wrapped, &u0, lm)?;
    let maps = problem.maps;
    let params: Vec<f64> = outcome
        .params
        .iter()
        .zip(&maps)
        .map(|(u, map)| map.forward(*u))
        .collect();
    let n = params.len();
    let mut covariance = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            covariance[(i, j)] = outcome.covariance[(i, j)]
                * maps[i].derivative(outcome.params[i])
                * maps[j].derivative(outcome.params[j]);
        }
    }
    let mut warnings = Vec::new();
    for (k, map) in maps.iter().enumerate() {
        if map.pinned(outcome.params[k]) {
            warnings.push(FitWarning::BoundaryPinned {
                name: problem.names[k].clone(),
            });
        }
    }
    let mut estimates = BTreeMap::new();
    let mut uncertainties = BTreeMap::new();
    for (k, name) in problem.names.iter().enumerate() {
        estimates.insert(name.clone(), params[k]);
        uncertainties.insert(name.clone(), covariance[(k, k)].max(0.0).sqrt());
    }
    let result = FitResult {
        estimates,
        uncertainties,
        param_names: problem.names,
        covariance,
        residual_norm: outcome.residual_norm,
        iterations: outcome.iterations,
        converged: outcome.converged,
        warnings,
    };
    Ok((params, result))
}

/// (offsets, values, sigmas) of the unmasked points.
type MaskedData = (Vec<f64>, Vec<f64>, Vec<f64>);

fn data_and_weights(trace: &SpectrumTrace, options: &FitOptions) -> Result<MaskedData, FitError> {
    if let Some(w) = &options.weights {
        if w.len() != trace.len() {
            return Err(FitError::WeightLength {
                expected: trace.len(),
                got: w.len(),
            });
        }
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut sigmas = Vec::new();
    for i in 0..trace.len() {
        if trace.is_masked(i) {
            continue;
        }
        xs.push(trace.offsets()[i]);
        ys.push(trace.values()[i]);
        sigmas.push(options.weights.as_ref().map_or(1.0, |w| w[i]));
    }
    if xs.is_empty() {
        return Err(FitError::EmptyData);
    }
    Ok((xs, ys, sigmas))
}

/// Undriven reflection model: reflected noise floor, a narrow positive and a
/// broad negative Lorentzian, plus an instrumental scale, offset, and
/// parabolic background.
#[allow(clippy::too_many_arguments)]
pub fn no_drive_model(
    grid: &[f64],
    n: f64,
    m: f64,
    eta_c: f64,
    gamma: f64,
    scale: f64,
    offset: f64,
    curvature: f64,
) -> Vec<f64> {
    let gy = gamma * (n - m + 0.5);
    let gx = gamma * (n + m + 0.5);
    let narrow = m - (1.0 - eta_c) * n;
    let broad = m + (1.0 - eta_c) * n;
    let pre = gamma / (2.0 * PI * (2.0 * n + 1.0));
    grid.iter()
        .map(|&w| {
            let body = n / (2.0 * PI * eta_c)
                + pre * (gy * narrow / (w * w + gy * gy) - gx * broad / (w * w + gx * gx));
            scale * body + offset + curvature * w * w
        })
        .collect()
}

/// Fit the undriven reflection spectrum for (N, M) with γ and η_c fixed.
/// Estimates include the derived M − N, the narrow half width, and the
/// squeezing level in dB.
pub fn fit_no_drive(
    trace: &SpectrumTrace,
    gamma: f64,
    eta_c: f64,
    options: &FitOptions,
) -> Result<FitResult, FitError> {
    let (xs, ys, sigmas) = data_and_weights(trace, options)?;

    // Initialization: moments from the gain tag when present, otherwise a
    // moderately squeezed guess; offset from the flat level.
    let (mut n0, mut r0) = (0.3, 0.8);
    if let Some(gain_db) = trace.metadata.gain_db {
        let (ni, mi) = crate::model::ideal_moments_from_gain(gain_db.max(0.0));
        n0 = (0.5 * ni).max(1e-3);
        let m0 = 0.5 * mi;
        r0 = (m0 / m_from_ratio(n0, 1.0)).clamp(0.05, 0.999);
    }
    let mut flat: Vec<f64> = ys.clone();
    flat.sort_by(f64::total_cmp);
    let median = flat[flat.len() / 2];
    let offset0 = median - n0 / (2.0 * PI * eta_c);
    let n0 = *options.initial.get("n").unwrap_or(&n0);
    let r0 = *options.initial.get("r").unwrap_or(&r0);

    let coords = options.no_drive_coords;
    let names = match coords {
        NoDriveCoords::NRatio => vec!["n", "r", "scale", "offset", "curvature"],
        NoDriveCoords::NM => vec!["n", "m", "scale", "offset", "curvature"],
    };
    let maps = vec![
        ParamMap::Positive,
        match coords {
            NoDriveCoords::NRatio => ParamMap::UnitInterval,
            NoDriveCoords::NM => ParamMap::Positive,
        },
        ParamMap::Positive,
        ParamMap::Free,
        ParamMap::Free,
    ];
    let second0 = match coords {
        NoDriveCoords::NRatio => r0,
        NoDriveCoords::NM => m_from_ratio(n0, r0).max(1e-4),
    };
    let init = vec![n0.max(1e-4), second0, 1.0, offset0, 0.0];

    let resid = move |p: &[f64]| -> Option<Vec<f64>> {
        let n = p[0];
        let m = match coords {
            NoDriveCoords::NRatio => m_from_ratio(n, p[1]),
            NoDriveCoords::NM => {
                if p[1] > m_from_ratio(n, 1.0) {
                    return None;
                }
                p[1]
            }
        };
        let model = no_drive_model(&xs, n, m, eta_c, gamma, p[2], p[3], p[4]);
        Some(
            model
                .iter()
                .zip(&ys)
                .zip(&sigmas)
                .map(|((f, y), s)| (f - y) / s)
                .collect(),
        )
    };

    let problem = Problem {
        names: names.iter().map(|s| s.to_string()).collect(),
        maps,
        init,
        residuals: Box::new(resid),
    };
    let (params, mut result) = run(problem, &options.lm)?;

    let n = params[0];
    let (m, dm_dn, dm_dsecond) = match coords {
        NoDriveCoords::NRatio => {
            let r = params[1];
            let mmax = m_from_ratio(n, 1.0);
            let dmax_dn = if mmax > 0.0 { (2.0 * n + 1.0) / (2.0 * mmax) } else { 0.0 };
            (r * mmax, r * dmax_dn, mmax)
        }
        NoDriveCoords::NM => (params[1], 0.0, 1.0),
    };
    insert_moment_diagnostics(&mut result, n, m, dm_dn, dm_dsecond, gamma);
    Ok(result)
}

/// Derived squeezing quantities and their propagated uncertainties, given
/// the derivative of M with respect to the first two fit parameters.
fn insert_moment_diagnostics(
    result: &mut FitResult,
    n: f64,
    m: f64,
    dm_dn: f64,
    dm_dsecond: f64,
    gamma: f64,
) {
    let cov = &result.covariance;
    let var_m = dm_dn * dm_dn * cov[(0, 0)]
        + 2.0 * dm_dn * dm_dsecond * cov[(0, 1)]
        + dm_dsecond * dm_dsecond * cov[(1, 1)];
    // M − N has gradient (dm_dn − 1, dm_dsecond) over (n, second).
    let gn = dm_dn - 1.0;
    let var_diff = gn * gn * cov[(0, 0)] + 2.0 * gn * dm_dsecond * cov[(0, 1)] + dm_dsecond * dm_dsecond * cov[(1, 1)];
    result.estimates.insert("m".into(), m);
    result.uncertainties.insert("m".into(), var_m.max(0.0).sqrt());
    result.estimates.insert("m_minus_n".into(), m - n);
    result
        .uncertainties
        .insert("m_minus_n".into(), var_diff.max(0.0).sqrt());
    result.estimates.insert("gamma_y".into(), gamma * (n - m + 0.5));
    let vac_ratio = ((n - m + 0.5) / 0.5).max(1e-12);
    result.estimates.insert("squeezing_db".into(), -10.0 * vac_ratio.log10());
}

/// Three Lorentzians of given centers, half widths, and peak heights on a
/// quadratic background.
pub fn three_lorentzian_model(
    grid: &[f64],
    centers: &[f64; 3],
    half_widths: &[f64; 3],
    heights: &[f64; 3],
    background: &[f64; 3],
) -> Vec<f64> {
    grid.iter()
        .map(|&w| {
            let mut v = background[0] + background[1] * w + background[2] * w * w;
            for k in 0..3 {
                let hw = half_widths[k];
                let d = w - centers[k];
                v += heights[k] * hw * hw / (d * d + hw * hw);
            }
            v
        })
        .collect()
}

/// Approximate triplet fit: three Lorentzians plus a parabolic background.
/// Estimates carry the individual peak parameters plus the mean sideband
/// half width and splitting used for phase sweeps.
pub fn fit_three_lorentzian(trace: &SpectrumTrace, options: &FitOptions) -> Result<FitResult, FitError> {
    let (xs, ys, sigmas) = data_and_weights(trace, options)?;
    if xs.len() < 12 {
        return Err(FitError::TooFewPoints {
            needed: 12,
            got: xs.len(),
        });
    }

    let min_y = ys.iter().copied().fold(f64::INFINITY, f64::min);
    // Center init: tallest sample. Sidebands: the drive tag when present,
    // otherwise the tallest sample beyond twice the center's half width.
    let center_idx = ys
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.total_cmp(b))
        .map(|(i, _)| i)
        .unwrap();
    let c0 = xs[center_idx];
    let peak0 = ys[center_idx] - min_y;
    let half_level = min_y + 0.5 * peak0;
    let mut hw0 = (xs[xs.len() - 1] - xs[0]) / 20.0;
    for i in center_idx..xs.len() {
        if ys[i] < half_level {
            hw0 = xs[i] - c0;
            break;
        }
    }
    let split0 = match (trace.metadata.rabi_hz, trace.metadata.gamma_hz) {
        (Some(rabi), Some(gamma)) if gamma > 0.0 => rabi / gamma,
        _ => {
            let mut best = (0.0, 2.0 * hw0.abs().max(1e-3));
            for (i, &x) in xs.iter().enumerate() {
                if (x - c0).abs() > 2.5 * hw0 && ys[i] - min_y > best.0 {
                    best = (ys[i] - min_y, (x - c0).abs());
                }
            }
            best.1
        }
    };
    let split0 = *options.initial.get("splitting").unwrap_or(&split0);
    let side_height0 = (peak0 / 3.0).max(1e-6);

    let names: Vec<String> = [
        "center_offset",
        "sideband_offset_pos",
        "sideband_offset_neg",
        "center_hwhm",
        "sideband_hwhm_pos",
        "sideband_hwhm_neg",
        "center_height",
        "sideband_height_pos",
        "sideband_height_neg",
        "bg_const",
        "bg_slope",
        "bg_curvature",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let maps = vec![
        ParamMap::Free,
        ParamMap::Free,
        ParamMap::Free,
        ParamMap::Positive,
        ParamMap::Positive,
        ParamMap::Positive,
        ParamMap::Free,
        ParamMap::Free,
        ParamMap::Free,
        ParamMap::Free,
        ParamMap::Free,
        ParamMap::Free,
    ];
    let init = vec![
        c0,
        c0 + split0,
        c0 - split0,
        hw0.max(1e-3),
        (1.5 * hw0).max(1e-3),
        (1.5 * hw0).max(1e-3),
        peak0.max(1e-6),
        side_height0,
        side_height0,
        min_y,
        0.0,
        0.0,
    ];

    let resid = move |p: &[f64]| -> Option<Vec<f64>> {
        let model = three_lorentzian_model(
            &xs,
            &[p[0], p[1], p[2]],
            &[p[3], p[4], p[5]],
            &[p[6], p[7], p[8]],
            &[p[9], p[10], p[11]],
        );
        Some(
            model
                .iter()
                .zip(&ys)
                .zip(&sigmas)
                .map(|((f, y), s)| (f - y) / s)
                .collect(),
        )
    };

    let problem = Problem {
        names,
        maps,
        init,
        residuals: Box::new(resid),
    };
    let (params, mut result) = run(problem, &options.lm)?;

    let sideband_hwhm = 0.5 * (params[4] + params[5]);
    let splitting = 0.5 * ((params[1] - params[0]).abs() + (params[2] - params[0]).abs());
    result.estimates.insert("sideband_hwhm".into(), sideband_hwhm);
    let var = 0.25 * (result.covariance[(4, 4)] + result.covariance[(5, 5)])
        + 0.5 * result.covariance[(4, 5)];
    result
        .uncertainties
        .insert("sideband_hwhm".into(), var.max(0.0).sqrt());
    result.estimates.insert("sideband_splitting".into(), splitting);
    // Sidebands count as unresolvable when broader than their splitting, or
    // when the fit leaves them with no appreciable weight (broadened beyond
    // visibility, the fitted widths then just chase noise).
    let side_height = params[7].abs().max(params[8].abs());
    if sideband_hwhm > splitting || side_height < 0.05 * params[6].abs() {
        result.warnings.push(FitWarning::SidebandUnresolvable {
            width: sideband_hwhm,
            splitting,
        });
    }
    Ok(result)
}

/// Joint fit of several driven reflection spectra taken at known relative
/// squeezing phases: (N, r, Ω, base Φ) are shared, while scale, offset, and
/// background curvature float per trace. γ (in trace frequency units) and
/// η_c are fixed inputs.
pub fn fit_full_joint(
    traces: &[SpectrumTrace],
    gamma: f64,
    eta_c: f64,
    phase_offsets: &[f64],
    options: &FitOptions,
) -> Result<FitResult, FitError> {
    if traces.is_empty() {
        return Err(FitError::EmptyData);
    }
    assert_eq!(traces.len(), phase_offsets.len(), "one phase offset per trace");
    let mut warnings = Vec::new();
    if traces.len() == 1 {
        warnings.push(FitWarning::Identifiability {
            reason: "a single phase cannot pin the off-axis rate; the base phase and M trade off".into(),
        });
    }

    let mut data = Vec::new();
    for trace in traces {
        // Per-trace weights are not supported jointly; uniform weighting.
        let (xs, ys, _) = data_and_weights(trace, &FitOptions::default())?;
        let scaled: Vec<f64> = xs.iter().map(|&x| x / gamma).collect();
        data.push((scaled, ys, xs));
    }

    // Initialization heuristic: moments from the first gain tag, drive from
    // the rabi tag, base phase set so the mean absolute phase is π/2 (the
    // protocol measures near the narrowest center line).
    let (mut n0, mut r0) = (0.5, 0.8);
    if let Some(gain_db) = traces[0].metadata.gain_db {
        let (ni, mi) = crate::model::ideal_moments_from_gain(gain_db.max(0.0));
        n0 = (0.5 * ni).max(1e-3);
        r0 = ((0.5 * mi) / m_from_ratio(n0, 1.0)).clamp(0.05, 0.999);
    }
    let mut rabi0 = 2.0;
    if let (Some(rabi_hz), Some(gamma_hz)) = (traces[0].metadata.rabi_hz, traces[0].metadata.gamma_hz) {
        if gamma_hz > 0.0 && rabi_hz > 0.0 {
            rabi0 = rabi_hz / gamma_hz;
        }
    }
    let mean_offset: f64 = phase_offsets.iter().sum::<f64>() / phase_offsets.len() as f64;
    let phi0 = PI / 2.0 - mean_offset;
    let n0 = *options.initial.get("n").unwrap_or(&n0);
    let r0 = *options.initial.get("r").unwrap_or(&r0);
    let rabi0 = *options.initial.get("rabi").unwrap_or(&rabi0);
    let phi0 = *options.initial.get("phi").unwrap_or(&phi0);

    let mut names: Vec<String> = vec!["n".into(), "r".into(), "rabi".into(), "phi".into()];
    let mut maps = vec![
        ParamMap::Positive,
        ParamMap::UnitInterval,
        ParamMap::Positive,
        ParamMap::Free,
    ];
    let mut init = vec![n0.max(1e-4), r0, rabi0.max(1e-3), phi0];
    for (k, (_, values, _)) in data.iter().enumerate() {
        names.push(format!("scale_{k}"));
        names.push(format!("offset_{k}"));
        names.push(format!("curvature_{k}"));
        maps.extend([ParamMap::Positive, ParamMap::Free, ParamMap::Free]);
        let flat = values.iter().copied().sum::<f64>() / values.len() as f64;
        init.extend([1.0, flat - n0 / (2.0 * PI * eta_c), 0.0]);
    }

    let offsets = phase_offsets.to_vec();
    let resid = move |p: &[f64]| -> Option<Vec<f64>> {
        let n = p[0];
        let m = m_from_ratio(n, p[1]);
        let rabi = p[2];
        let phi = p[3];
        let mut all = Vec::new();
        for (k, (grid_gamma, ys, xs)) in data.iter().enumerate() {
            let bath = SqueezedBath::new(n, m, phi + offsets[k]).ok()?;
            let atom = AtomParams::new(1.0, eta_c, rabi).ok()?;
            let body = reflection_values(&bath, &atom, grid_gamma).ok()?;
            let scale = p[4 + 3 * k];
            let offset = p[5 + 3 * k];
            let curv = p[6 + 3 * k];
            for ((b, y), x) in body.iter().zip(ys).zip(xs) {
                all.push(scale * b + offset + curv * x * x - y);
            }
        }
        Some(all)
    };

    let problem = Problem {
        names,
        maps,
        init,
        residuals: Box::new(resid),
    };
    let (params, mut result) = run(problem, &options.lm)?;
    result.warnings.extend(warnings);

    let n = params[0];
    let r = params[1];
    let mmax = m_from_ratio(n, 1.0);
    let dmax_dn = if mmax > 0.0 { (2.0 * n + 1.0) / (2.0 * mmax) } else { 0.0 };
    insert_moment_diagnostics(&mut result, n, r * mmax, r * dmax_dn, mmax, gamma);
    Ok(result)
}

/// One point of a gain sweep: measured M − N against the amplifier gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSweepPoint {
    pub gain_db: f64,
    pub m_minus_n: f64,
    pub uncertainty: f64,
}

/// One-parameter weighted fit of the overall efficiency η through the gain
/// calibration: M − N = η (M_ideal − N_ideal)(G).
pub fn fit_efficiency(points: &[GainSweepPoint], options: &FitOptions) -> Result<FitResult, FitError> {
    if points.len() < 3 {
        return Err(FitError::TooFewPoints {
            needed: 3,
            got: points.len(),
        });
    }
    let first = points[0].gain_db;
    if points.iter().all(|p| (p.gain_db - first).abs() < 1e-12) {
        return Err(FitError::DegenerateSweep);
    }
    let ideal: Vec<f64> = points
        .iter()
        .map(|p| {
            let (n, m) = crate::model::ideal_moments_from_gain(p.gain_db);
            m - n
        })
        .collect();
    let data: Vec<(f64, f64)> = points
        .iter()
        .map(|p| (p.m_minus_n, if p.uncertainty > 0.0 { p.uncertainty } else { 1.0 }))
        .collect();

    let resid = move |p: &[f64]| -> Option<Vec<f64>> {
        Some(
            ideal
                .iter()
                .zip(&data)
                .map(|(ideal, (y, s))| (p[0] * ideal - y) / s)
                .collect(),
        )
    };
    let problem = Problem {
        names: vec!["eta".into()],
        maps: vec![ParamMap::UnitInterval],
        init: vec![*options.initial.get("eta").unwrap_or(&0.5)],
        residuals: Box::new(resid),
    };
    let (_, result) = run(problem, &options.lm)?;
    Ok(result)
}

/// Ground truth for synthetic traces. Everything is in units of γ.
#[derive(Debug, Clone, PartialEq)]
pub enum SyntheticModel {
    NoDrive {
        bath: SqueezedBath,
        eta_c: f64,
        scale: f64,
        offset: f64,
        curvature: f64,
    },
    FullAnalytic {
        bath: SqueezedBath,
        eta_c: f64,
        rabi: f64,
        background: crate::spectra::BackgroundModel,
        scale: f64,
        offset: f64,
        curvature: f64,
    },
    ThreeLorentzian {
        centers: [f64; 3],
        half_widths: [f64; 3],
        heights: [f64; 3],
        background: [f64; 3],
    },
}

/// Multiplicative Gaussian noise: each power sample becomes v(1 + σz),
/// mimicking ratio-normalized spectrum-analyzer averages. σ = 0 reproduces
/// the model exactly; equal seeds give identical traces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

pub fn synthesize_trace(
    model: &SyntheticModel,
    noise: &NoiseSpec,
    grid: &[f64],
) -> Result<SpectrumTrace, FitError> {
    let mut metadata = TraceMetadata {
        unit: OffsetUnit::Gamma,
        seed: Some(noise.seed),
        ..TraceMetadata::default()
    };
    let mut mask_coherent = false;
    let values = match model {
        SyntheticModel::NoDrive {
            bath,
            eta_c,
            scale,
            offset,
            curvature,
        } => {
            metadata.eta_c = Some(*eta_c);
            metadata.phi_rad = Some(bath.phi_raw());
            no_drive_model(
                grid,
                bath.n_photons(),
                bath.m_mag(),
                *eta_c,
                1.0,
                *scale,
                *offset,
                *curvature,
            )
        }
        SyntheticModel::FullAnalytic {
            bath,
            eta_c,
            rabi,
            background,
            scale,
            offset,
            curvature,
        } => {
            metadata.eta_c = Some(*eta_c);
            metadata.phi_rad = Some(bath.phi_raw());
            mask_coherent = *rabi > 0.0;
            let atom = AtomParams::new(1.0, *eta_c, *rabi).map_err(|_| FitError::InfeasibleStart)?;
            let mut body = crate::spectra::reflection_values(bath, &atom, grid)?;
            // Replace the flat reflected-noise term with the requested shape.
            if !matches!(background, crate::spectra::BackgroundModel::Flat) {
                let flat = bath.n_photons() / (2.0 * PI * eta_c);
                let shaped = crate::spectra::squeezer_background(grid, bath.n_photons(), background);
                for (v, s) in body.iter_mut().zip(shaped) {
                    *v += s / (2.0 * PI * eta_c) - flat;
                }
            }
            body.iter()
                .zip(grid)
                .map(|(b, &w)| scale * b + offset + curvature * w * w)
                .collect()
        }
        SyntheticModel::ThreeLorentzian {
            centers,
            half_widths,
            heights,
            background,
        } => three_lorentzian_model(grid, centers, half_widths, heights, background),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let noisy: Vec<f64> = values
        .iter()
        .map(|&v| {
            let z: f64 = StandardNormal.sample(&mut rng);
            v * (1.0 + noise.sigma * z)
        })
        .collect();

    let trace = SpectrumTrace::new(grid.to_vec(), noisy, metadata)?;
    Ok(if mask_coherent {
        trace.with_coherent_mask(3)
    } else {
        trace
    })
}
