//! Resonance fluorescence and reflection spectra of a coherently driven
//! two-level emitter in broadband squeezed vacuum.
//!
//! The crate has three legs that check each other:
//!
//! * [`model`] and [`spectra`] carry the closed-form theory: reservoir
//!   moments and derived decay rates, the Bloch steady state, regression
//!   correlators via the cubic resolvent, and the fluorescence/reflection
//!   spectra including their weak- and strong-drive limits.
//! * [`oracle`] integrates the master equation by brute force and rebuilds
//!   the same correlators and spectra numerically, with no shared code path.
//! * [`fitting`] extracts squeezing parameters back out of (synthetic or
//!   measured) traces with a damped least-squares optimizer.
//!
//! [`io`] serializes traces, job configurations, and fit reports in
//! diff-able text formats; the `sqfluor` binary ties everything into
//! reproducible batch runs.

pub mod fitting;
pub mod io;
pub mod model;
pub mod oracle;
pub mod spectra;
pub mod trace;
pub mod validate;

pub use model::{
    bath_from_gain, ideal_moments_from_gain, quadrature_variance, rates_from_params, squeezing_db,
    validity_check, AtomParams, GainPoint, ModelError, RateSet, SqueezedBath, ValidityReport,
};
pub use spectra::{
    bloch_matrix, correlator, cubic_roots, decompose, default_grid, fluorescence_spectrum,
    reflection_spectrum, squeezer_background, steady_state, strong_drive_reflection,
    weak_drive_reflection, Axis, BackgroundModel, BlochState, CorrelatorOrder, ExpSum,
    SpectraError, SpectralDecomposition, SpectrumResult,
};
pub use trace::{OffsetUnit, SpectrumTrace, TraceError, TraceMetadata};
