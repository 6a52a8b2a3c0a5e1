//! Parameter conventions shared by every other module: reservoir moments,
//! atom parameters, derived decay rates, amplifier-gain calibration, and
//! quadrature-space geometry.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

/// Absolute slack admitted on the physicality bound |M| <= sqrt(N(N+1)),
/// so that round-tripped floats are not rejected.
pub const PHYSICALITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("unphysical reservoir moments: |M| = {m_mag} exceeds sqrt(N(N+1)) = {bound} for N = {n_photons}")]
    UnphysicalMoments {
        n_photons: f64,
        m_mag: f64,
        bound: f64,
    },
    #[error("{name} must be {requirement} (got {value})")]
    InvalidParameter {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
}

fn require(ok: bool, name: &'static str, requirement: &'static str, value: f64) -> Result<(), ModelError> {
    if ok {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            name,
            requirement,
            value,
        })
    }
}

/// Second-order moments (N, |M|, Φ) of the effective squeezed reservoir seen
/// by the atom. `phi` is the relative phase between the Rabi drive and the
/// amplification axis of the squeezing ellipse; every derived quantity
/// depends on 2Φ only, so the stored angle is reduced to [0, π) while the
/// original value is kept for sweep bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezedBath {
    n_photons: f64,
    m_mag: f64,
    phi: f64,
    phi_raw: f64,
}

impl SqueezedBath {
    pub fn new(n_photons: f64, m_mag: f64, phi: f64) -> Result<Self, ModelError> {
        require(
            n_photons.is_finite() && n_photons >= 0.0,
            "n_photons",
            "finite and >= 0",
            n_photons,
        )?;
        require(m_mag.is_finite() && m_mag >= 0.0, "m_mag", "finite and >= 0", m_mag)?;
        require(phi.is_finite(), "phi", "finite", phi)?;
        let bound = (n_photons * (n_photons + 1.0)).sqrt();
        if m_mag > bound + PHYSICALITY_TOL {
            return Err(ModelError::UnphysicalMoments {
                n_photons,
                m_mag,
                bound,
            });
        }
        Ok(Self {
            n_photons,
            m_mag: m_mag.min(bound),
            phi: phi.rem_euclid(PI),
            phi_raw: phi,
        })
    }

    /// Ordinary vacuum: N = M = 0.
    pub fn vacuum() -> Self {
        Self {
            n_photons: 0.0,
            m_mag: 0.0,
            phi: 0.0,
            phi_raw: 0.0,
        }
    }

    /// Minimum-uncertainty squeezing, M = sqrt(N(N+1)).
    pub fn ideal(n_photons: f64, phi: f64) -> Result<Self, ModelError> {
        let m = (n_photons * (n_photons + 1.0)).sqrt();
        Self::new(n_photons, m, phi)
    }

    pub fn n_photons(&self) -> f64 {
        self.n_photons
    }

    pub fn m_mag(&self) -> f64 {
        self.m_mag
    }

    /// Relative phase reduced to [0, π).
    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// The angle originally supplied, before reduction.
    pub fn phi_raw(&self) -> f64 {
        self.phi_raw
    }

    /// Complex two-photon moment M = |M| e^{2iΦ}.
    pub fn m_complex(&self) -> Complex64 {
        Complex64::from_polar(self.m_mag, 2.0 * self.phi)
    }

    /// Largest |M| compatible with positivity at this N.
    pub fn m_max(&self) -> f64 {
        (self.n_photons * (self.n_photons + 1.0)).sqrt()
    }

    /// Dilute both moments by the efficiency `eta`, the linear beam-splitter
    /// map on second moments: N -> ηN, M -> ηM.
    pub fn scaled(&self, eta: f64) -> Result<Self, ModelError> {
        require(eta.is_finite() && eta > 0.0 && eta <= 1.0, "eta", "in (0, 1]", eta)?;
        Self::new(eta * self.n_photons, eta * self.m_mag, self.phi_raw)
    }
}

/// Two-level emitter parameters: total radiative linewidth γ (angular units),
/// strong-port quantum efficiency η_c = γ_ext/(γ_int + γ_ext), and the
/// resonant Rabi amplitude Ω expressed in units of γ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomParams {
    gamma: f64,
    eta_c: f64,
    rabi: f64,
}

impl AtomParams {
    pub fn new(gamma: f64, eta_c: f64, rabi: f64) -> Result<Self, ModelError> {
        require(gamma.is_finite() && gamma > 0.0, "gamma", "> 0", gamma)?;
        require(
            eta_c.is_finite() && eta_c > 0.0 && eta_c <= 1.0,
            "eta_c",
            "in (0, 1]",
            eta_c,
        )?;
        require(rabi.is_finite() && rabi >= 0.0, "rabi", ">= 0", rabi)?;
        Ok(Self { gamma, eta_c, rabi })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn eta_c(&self) -> f64 {
        self.eta_c
    }

    /// Rabi amplitude in units of γ.
    pub fn rabi(&self) -> f64 {
        self.rabi
    }

    /// External (strong-port) decay rate γ_ext = η_c γ.
    pub fn gamma_ext(&self) -> f64 {
        self.eta_c * self.gamma
    }

    /// Internal decay rate γ_int = (1 − η_c) γ.
    pub fn gamma_int(&self) -> f64 {
        (1.0 - self.eta_c) * self.gamma
    }

    /// Same atom with the linewidth normalized to one, for the dimensionless
    /// spectral core.
    pub fn normalized(&self) -> Self {
        Self {
            gamma: 1.0,
            eta_c: self.eta_c,
            rabi: self.rabi,
        }
    }

    pub fn with_rabi(&self, rabi: f64) -> Result<Self, ModelError> {
        Self::new(self.gamma, self.eta_c, rabi)
    }
}

/// Decay rates derived from the reservoir moments, in the same units as the
/// linewidth passed to [`rates_from_params`]:
///
/// γ± = γ(N ± |M| cos 2Φ + ½),  γ_M = γ|M| sin 2Φ,  γ_N = γ(2N + 1),
/// γ_NM = γ sqrt((N + ½)² − M²),  γ_{x,y} = γ(N ± M + ½).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSet {
    pub g_plus: f64,
    pub g_minus: f64,
    pub g_m: f64,
    pub g_n: f64,
    pub g_nm: f64,
    pub g_x: f64,
    pub g_y: f64,
}

pub fn rates_from_params(bath: &SqueezedBath, atom: &AtomParams) -> RateSet {
    let g = atom.gamma();
    let n = bath.n_photons();
    let m = bath.m_mag();
    let (sin2p, cos2p) = (2.0 * bath.phi()).sin_cos();
    RateSet {
        g_plus: g * (n + m * cos2p + 0.5),
        g_minus: g * (n - m * cos2p + 0.5),
        g_m: g * m * sin2p,
        g_n: g * (2.0 * n + 1.0),
        // (N + ½)² − M² >= ¼ whenever |M| <= sqrt(N(N+1)), so this stays real.
        g_nm: g * ((n + 0.5) * (n + 0.5) - m * m).max(0.0).sqrt(),
        g_x: g * (n + m + 0.5),
        g_y: g * (n - m + 0.5),
    }
}

/// Rates in units of γ, used throughout the dimensionless spectral core.
pub(crate) fn unit_rates(bath: &SqueezedBath) -> RateSet {
    let unit = AtomParams::new(1.0, 1.0, 0.0).expect("unit atom");
    rates_from_params(bath, &unit)
}

/// A point on the amplifier calibration curve: phase-preserving power gain in
/// dB together with the overall efficiency η = η_loss η_c that dilutes the
/// ideal output moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainPoint {
    gain_db: f64,
    efficiency: f64,
}

impl GainPoint {
    pub fn new(gain_db: f64, efficiency: f64) -> Result<Self, ModelError> {
        require(gain_db.is_finite() && gain_db >= 0.0, "gain_db", ">= 0", gain_db)?;
        require(
            efficiency.is_finite() && efficiency > 0.0 && efficiency <= 1.0,
            "efficiency",
            "in (0, 1]",
            efficiency,
        )?;
        Ok(Self { gain_db, efficiency })
    }

    pub fn gain_db(&self) -> f64 {
        self.gain_db
    }

    pub fn gain_linear(&self) -> f64 {
        10f64.powf(self.gain_db / 10.0)
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }
}

/// Ideal (lossless) output moments of a phase-preserving amplifier at linear
/// power gain G, from 2(N ± M + ½) = (√G ± √(G−1))². The pair solves to
/// N = G − 1 and M = sqrt(G(G−1)).
pub fn ideal_moments_from_gain(gain_db: f64) -> (f64, f64) {
    let g = 10f64.powf(gain_db / 10.0);
    let amplified = 0.5 * (g.sqrt() + (g - 1.0).max(0.0).sqrt()).powi(2);
    let squeezed = 0.5 * (g.sqrt() - (g - 1.0).max(0.0).sqrt()).powi(2);
    let n = 0.5 * (amplified + squeezed) - 0.5;
    let m = 0.5 * (amplified - squeezed);
    (n, m)
}

/// Reservoir moments at a gain point: the ideal moments diluted by the
/// overall efficiency. The squeezing phase is whatever the caller supplies.
pub fn bath_from_gain(point: &GainPoint, phi: f64) -> Result<SqueezedBath, ModelError> {
    let (n_ideal, m_ideal) = ideal_moments_from_gain(point.gain_db());
    let eta = point.efficiency();
    SqueezedBath::new(eta * n_ideal, eta * m_ideal, phi)
}

/// Quadrature phase variance V(θ) = ½[N + M cos(2(θ − φ)) + ½], where φ is
/// the amplification-axis angle. The minimum ½(N − M + ½) sits at θ = φ + π/2.
pub fn quadrature_variance(theta: f64, bath: &SqueezedBath, amplified_axis_phi: f64) -> f64 {
    0.5 * (bath.n_photons() + bath.m_mag() * (2.0 * (theta - amplified_axis_phi)).cos() + 0.5)
}

/// Squeezing below the vacuum quadrature variance in dB:
/// −10 log10((N − M + ½)/½). Positive values mean squeezing.
pub fn squeezing_db(bath: &SqueezedBath) -> f64 {
    -10.0 * ((bath.n_photons() - bath.m_mag() + 0.5) / 0.5).log10()
}

/// Advisory two-level-approximation check. The effective atom description
/// holds for source bandwidth and drive amplitude small against 0.6g, where g
/// is the dipole coupling that splits the dressed states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidityReport {
    /// κ/(0.6 g)
    pub bandwidth_ratio: f64,
    /// Ω/(0.6 g)
    pub rabi_ratio: f64,
    pub bandwidth_warn: bool,
    pub bandwidth_fail: bool,
    pub rabi_warn: bool,
    pub rabi_fail: bool,
}

impl ValidityReport {
    pub fn pass(&self) -> bool {
        !self.bandwidth_fail && !self.rabi_fail
    }
}

/// `source_bandwidth` (κ of the squeezing source) and `coupling_g` must share
/// units with `atom.gamma()`; the drive amplitude is `atom.rabi() * gamma`.
pub fn validity_check(atom: &AtomParams, source_bandwidth: f64, coupling_g: f64) -> ValidityReport {
    let limit = 0.6 * coupling_g;
    let bandwidth_ratio = source_bandwidth / limit;
    let rabi_ratio = atom.rabi() * atom.gamma() / limit;
    ValidityReport {
        bandwidth_ratio,
        rabi_ratio,
        bandwidth_warn: bandwidth_ratio > 0.1,
        bandwidth_fail: bandwidth_ratio > 0.6,
        rabi_warn: rabi_ratio > 0.1,
        rabi_fail: rabi_ratio > 0.6,
    }
}
