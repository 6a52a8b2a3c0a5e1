//! Steady state of the optical Bloch equations with squeezing, and the drift
//! matrix that governs both relaxation and regression.

use nalgebra::Matrix3;

use super::SpectraError;
use crate::model::{unit_rates, AtomParams, SqueezedBath};

/// Pauli expectation values (⟨σx⟩, ⟨σy⟩, ⟨σz⟩).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochState {
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
}

impl BlochState {
    /// Squared Bloch-vector length; at most 1 for a physical state.
    pub fn norm_sq(&self) -> f64 {
        self.sx * self.sx + self.sy * self.sy + self.sz * self.sz
    }

    /// ⟨σ−⟩ = (⟨σx⟩ − i⟨σy⟩)/2.
    pub fn sigma_minus(&self) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.sx / 2.0, -self.sy / 2.0)
    }

    /// Excited-state population (1 + ⟨σz⟩)/2.
    pub fn excited_population(&self) -> f64 {
        0.5 * (1.0 + self.sz)
    }
}

/// Closed-form steady state:
///
/// ⟨σx⟩ = Ω γ_M / d,  ⟨σy⟩ = Ω γ_+ / d,  ⟨σz⟩ = −γ_NM² / d,
/// with d = γ_N γ_NM² + Ω² γ_+ (everything in units of γ).
pub fn steady_state(bath: &SqueezedBath, atom: &AtomParams) -> Result<BlochState, SpectraError> {
    let r = unit_rates(bath);
    let w = atom.rabi();
    let denominator = r.g_n * r.g_nm * r.g_nm + w * w * r.g_plus;
    if denominator <= 0.0 || denominator.is_nan() {
        return Err(SpectraError::DegenerateSteadyState { denominator });
    }
    Ok(BlochState {
        sx: w * r.g_m / denominator,
        sy: w * r.g_plus / denominator,
        sz: -(r.g_nm * r.g_nm) / denominator,
    })
}

/// Drift matrix of the Bloch equations in units of γ:
///
/// d/dt (⟨σx⟩, ⟨σy⟩, ⟨σz⟩)ᵀ = B (…)ᵀ − (0, 0, γ)ᵀ,
/// with rows (−γ+, γ_M, 0), (γ_M, −γ−, −Ω), (0, Ω, −γ_N).
pub fn bloch_matrix(bath: &SqueezedBath, atom: &AtomParams) -> Matrix3<f64> {
    let r = unit_rates(bath);
    let w = atom.rabi();
    Matrix3::new(
        -r.g_plus, r.g_m, 0.0, //
        r.g_m, -r.g_minus, -w, //
        0.0, w, -r.g_n,
    )
}
