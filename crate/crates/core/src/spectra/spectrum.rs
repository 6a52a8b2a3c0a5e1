//! Fluorescence and reflection spectra on sampled frequency grids.
//!
//! Frequencies are offsets from the atomic resonance in units of γ; power is
//! in the natural units of the closed forms (the fits treat scale as free).

use std::f64::consts::PI;

use num_complex::Complex64;

use super::correlator::{CorrelatorOrder, RegressionContext};
use super::SpectraError;
use crate::model::{unit_rates, AtomParams, SqueezedBath};
use crate::trace::{SpectrumTrace, TraceMetadata};

/// Shape of the squeezer noise background entering the reflection spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BackgroundModel {
    /// Broadband limit: constant noise level N.
    Flat,
    /// Cavity-filtered output noise N(ω) = N / (1 + (2ω/κ)²), normalized so
    /// N(0) = N with half-power point at ω = κ/2.
    LorentzianFiltered { bandwidth: f64 },
    /// The fitting convention: N (1 − c ω²), clipped at zero.
    Parabolic { curvature: f64 },
}

/// Background samples for a noise level `n` on `grid`.
pub fn squeezer_background(grid: &[f64], n: f64, shape: &BackgroundModel) -> Vec<f64> {
    assert!(n >= 0.0, "noise level must be nonnegative");
    match *shape {
        BackgroundModel::Flat => vec![n; grid.len()],
        BackgroundModel::LorentzianFiltered { bandwidth } => {
            assert!(bandwidth > 0.0, "filter bandwidth must be positive");
            let half = bandwidth / 2.0;
            grid.iter()
                .map(|&w| n * half * half / (half * half + w * w))
                .collect()
        }
        BackgroundModel::Parabolic { curvature } => grid
            .iter()
            .map(|&w| (n * (1.0 - curvature * w * w)).max(0.0))
            .collect(),
    }
}

/// A sampled spectrum plus the δ(ω) weight that is never placed on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub trace: SpectrumTrace,
    /// Weight of the elastic δ(ω) line, reported separately.
    pub coherent_weight: f64,
    /// True when near-degenerate resolvent roots forced a drive nudge.
    pub perturbed: bool,
}

/// Default sampling grid: ±8·max(Ω, γ_x) with 2001 points, wide enough for
/// every feature of the triplet and the broad quadrature channels.
pub fn default_grid(bath: &SqueezedBath, atom: &AtomParams) -> Vec<f64> {
    let r = unit_rates(bath);
    let span = 8.0 * atom.rabi().max(r.g_x);
    crate::trace::symmetric_grid(span.max(4.0), 2001)
}

fn gamma_metadata(atom: &AtomParams) -> TraceMetadata {
    TraceMetadata {
        eta_c: Some(atom.eta_c()),
        ..TraceMetadata::default()
    }
}

/// Incoherent resonance fluorescence spectrum
/// S(ω) = (1/π) Re ∫₀^∞ dt ⟨σ+(t)σ−(0)⟩ e^{iωt}, without the δ(ω) line.
pub fn fluorescence_spectrum(
    bath: &SqueezedBath,
    atom: &AtomParams,
    grid: &[f64],
) -> Result<SpectrumResult, SpectraError> {
    let decomposition = super::decompose(bath, atom)?;
    let values: Vec<f64> = grid.iter().map(|&w| decomposition.sample(w)).collect();
    let trace = SpectrumTrace::new(grid.to_vec(), values, gamma_metadata(atom))?;
    Ok(SpectrumResult {
        trace,
        coherent_weight: decomposition.coherent_weight.re,
        perturbed: decomposition.perturbed,
    })
}

struct ReflectionParts {
    values: Vec<f64>,
    coherent_weight: f64,
    perturbed: bool,
}

fn reflection_parts(
    bath: &SqueezedBath,
    atom: &AtomParams,
    grid: &[f64],
    background: &BackgroundModel,
) -> Result<ReflectionParts, SpectraError> {
    let eta_c = atom.eta_c();
    let n = bath.n_photons();
    let ctx = RegressionContext::new(bath, atom)?;

    let fluor = ctx.ladder_term(true, false, CorrelatorOrder::EvolvedLeft);
    let plus_later = ctx.ladder_term(true, true, CorrelatorOrder::EvolvedRight);
    let plus_earlier = ctx.ladder_term(true, true, CorrelatorOrder::EvolvedLeft);
    let minus_then_plus = ctx.ladder_term(true, false, CorrelatorOrder::EvolvedRight);

    let interference = plus_later
        .add(&plus_earlier.scaled(Complex64::new(-1.0, 0.0)))
        .scaled(bath.m_complex())
        .add(&minus_then_plus.scaled(Complex64::new(-n, 0.0)));

    let bg = squeezer_background(grid, n, background);
    let values: Vec<f64> = grid
        .iter()
        .zip(&bg)
        .map(|(&w, &b)| {
            b / (2.0 * PI * eta_c) + (n + eta_c) * fluor.re_transform(w) + interference.re_transform(w)
        })
        .collect();

    // The elastic weights combine to η_c |⟨σ−⟩|²: the M-terms of the
    // interference cancel exactly and the N-term eats part of the
    // fluorescence line.
    let coherent = (n + eta_c) * fluor.constant.re + interference.constant.re;

    Ok(ReflectionParts {
        values,
        coherent_weight: coherent,
        perturbed: fluor.perturbed,
    })
}

/// Reflection samples with a flat background, without trace packaging; the
/// inner loop of the joint fits.
pub fn reflection_values(
    bath: &SqueezedBath,
    atom: &AtomParams,
    grid: &[f64],
) -> Result<Vec<f64>, SpectraError> {
    Ok(reflection_parts(bath, atom, grid, &BackgroundModel::Flat)?.values)
}

/// Reflection spectrum from the strongly coupled port: reflected squeezer
/// noise, the fluorescence term scaled by (N + η_c), and the interference
/// term built from the σ+σ+ and σ−σ+ correlators.
pub fn reflection_spectrum(
    bath: &SqueezedBath,
    atom: &AtomParams,
    grid: &[f64],
    background: &BackgroundModel,
) -> Result<SpectrumResult, SpectraError> {
    let parts = reflection_parts(bath, atom, grid, background)?;
    let trace = SpectrumTrace::new(grid.to_vec(), parts.values, gamma_metadata(atom))?;
    Ok(SpectrumResult {
        trace,
        coherent_weight: parts.coherent_weight,
        perturbed: parts.perturbed,
    })
}

/// Undriven reflection spectrum: reflected noise plus a narrow positive
/// Lorentzian of half width γ_y and a broad negative one of half width γ_x,
///
/// S_R(ω) = N/(2πη_c) + (1/2π) γ/(2N+1) [ γ_y (M−(1−η_c)N)/(ω²+γ_y²)
///                                      − γ_x (M+(1−η_c)N)/(ω²+γ_x²) ].
pub fn weak_drive_reflection(
    bath: &SqueezedBath,
    atom: &AtomParams,
    grid: &[f64],
) -> Result<SpectrumTrace, SpectraError> {
    let r = unit_rates(bath);
    let n = bath.n_photons();
    let m = bath.m_mag();
    let eta_c = atom.eta_c();
    let prefactor = 1.0 / (2.0 * PI * (2.0 * n + 1.0));
    let narrow = m - (1.0 - eta_c) * n;
    let broad = m + (1.0 - eta_c) * n;
    let values: Vec<f64> = grid
        .iter()
        .map(|&w| {
            n / (2.0 * PI * eta_c)
                + prefactor
                    * (r.g_y * narrow / (w * w + r.g_y * r.g_y) - r.g_x * broad / (w * w + r.g_x * r.g_x))
        })
        .collect();
    Ok(SpectrumTrace::new(grid.to_vec(), values, gamma_metadata(atom))?)
}

/// Strong-drive limit (Ω much larger than every decay rate): three
/// Lorentzians at 0 and ±Ω with full widths 2γ+ and γ_N + γ−, carrying
/// spectral weights η_c/4 (center) and η_c/8 (each sideband) on top of the
/// reflected noise floor. The weights are the Ω → ∞ limit of the full
/// reflection spectrum; at η_c = 1, N = M = 0 they reproduce the classic
/// saturated-triplet 3:1 height ratio.
pub fn strong_drive_reflection(
    bath: &SqueezedBath,
    atom: &AtomParams,
    grid: &[f64],
) -> Result<SpectrumTrace, SpectraError> {
    let r = unit_rates(bath);
    let n = bath.n_photons();
    let eta_c = atom.eta_c();
    let w0 = atom.rabi();
    let side_half = 0.5 * (r.g_n + r.g_minus);
    let values: Vec<f64> = grid
        .iter()
        .map(|&w| {
            n / (2.0 * PI * eta_c)
                + eta_c / (4.0 * PI) * r.g_plus / (w * w + r.g_plus * r.g_plus)
                + eta_c / (8.0 * PI) * side_half / ((w - w0) * (w - w0) + side_half * side_half)
                + eta_c / (8.0 * PI) * side_half / ((w + w0) * (w + w0) + side_half * side_half)
        })
        .collect();
    Ok(SpectrumTrace::new(grid.to_vec(), values, gamma_metadata(atom))?)
}
