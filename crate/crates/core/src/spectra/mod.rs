//! Closed-form steady states, two-time correlators via the quantum
//! regression theorem and Laplace inversion, and the fluorescence and
//! reflection spectra of a resonantly driven two-level emitter in broadband
//! squeezed vacuum.

mod correlator;
mod roots;
mod spectrum;
mod steady;

pub use correlator::{
    correlator, decompose, ladder_correlator, Axis, CorrelatorOrder, ExpSum,
    SpectralDecomposition,
};
pub use roots::{closed_form_roots_aligned, cubic_coefficients, cubic_roots};
pub use spectrum::{
    default_grid, fluorescence_spectrum, reflection_spectrum, reflection_values,
    squeezer_background, strong_drive_reflection, weak_drive_reflection, BackgroundModel,
    SpectrumResult,
};
pub use steady::{bloch_matrix, steady_state, BlochState};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectraError {
    #[error("degenerate steady-state denominator: γ_N γ_NM² + Ω² γ_+ = {denominator}")]
    DegenerateSteadyState { denominator: f64 },
    #[error("resolvent roots remain degenerate after drive perturbation (min separation {separation:e})")]
    DegenerateRoots { separation: f64 },
    #[error(transparent)]
    Trace(#[from] crate::trace::TraceError),
}

/// Minimum pairwise root separation (units of γ) below which the
/// partial-fraction coefficients are numerically unreliable.
pub const ROOT_DEGENERACY_TOL: f64 = 1e-7;
