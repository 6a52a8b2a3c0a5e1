//! Nonlinear least-squares extraction of squeezing parameters from spectrum
//! traces: the undriven reflection formula, the approximate three-Lorentzian
//! triplet, joint multi-phase fits of the full analytic reflection model,
//! and the one-parameter efficiency calibration across a gain sweep.

mod lm;
mod models;

pub use lm::{minimize, LmOptions, LmOutcome, ParamMap};
pub use models::{
    fit_efficiency, fit_full_joint, fit_no_drive, fit_three_lorentzian, no_drive_model,
    synthesize_trace, three_lorentzian_model, FitOptions, FitResult, GainSweepPoint, NoDriveCoords,
    NoiseSpec, SyntheticModel,
};

use thiserror::Error;

/// The three spectral fit parameterizations and which of their parameters
/// are shared across traces in a joint fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    NoDrive,
    ThreeLorentzian,
    FullAnalytic,
}

impl ModelKind {
    pub fn shared_params(&self) -> &'static [&'static str] {
        match self {
            ModelKind::NoDrive => &["n", "r"],
            ModelKind::ThreeLorentzian => &[
                "center_offset",
                "sideband_offset_pos",
                "sideband_offset_neg",
                "center_hwhm",
                "sideband_hwhm_pos",
                "sideband_hwhm_neg",
                "center_height",
                "sideband_height_pos",
                "sideband_height_neg",
            ],
            ModelKind::FullAnalytic => &["n", "r", "rabi", "phi"],
        }
    }

    pub fn per_trace_params(&self) -> &'static [&'static str] {
        match self {
            ModelKind::NoDrive | ModelKind::FullAnalytic => &["scale", "offset", "curvature"],
            ModelKind::ThreeLorentzian => &["bg_const", "bg_slope", "bg_curvature"],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitWarning {
    /// A squashed parameter converged hard against its boundary.
    BoundaryPinned { name: String },
    /// Fitted sideband width exceeds the sideband splitting.
    SidebandUnresolvable { width: f64, splitting: f64 },
    Identifiability { reason: String },
    /// The spectral model nudged the drive to split degenerate roots.
    DegeneracyPerturbed,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("initial parameters are infeasible for the model")]
    InfeasibleStart,
    #[error("{points} data points cannot constrain {parameters} parameters")]
    Underdetermined { points: usize, parameters: usize },
    #[error("no usable data points after masking")]
    EmptyData,
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("all gain points are equal; the efficiency is unconstrained")]
    DegenerateSweep,
    #[error("weight vector length {got} does not match trace length {expected}")]
    WeightLength { expected: usize, got: usize },
    #[error(transparent)]
    Spectra(#[from] crate::spectra::SpectraError),
    #[error(transparent)]
    Trace(#[from] crate::trace::TraceError),
}
