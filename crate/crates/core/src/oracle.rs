//! Independent brute-force validation of the closed forms: fixed-step
//! integration of the master equation, two-time correlators through the
//! quantum regression theorem, and spectra by direct quadrature of the
//! one-sided Fourier integral.
//!
//! Nothing here touches the resolvent machinery; agreement between the two
//! routes is the repository's central check. Time is measured in 1/γ.

use num_complex::Complex64;
use thiserror::Error;

use crate::model::{unit_rates, AtomParams, SqueezedBath};
use crate::spectra::{Axis, CorrelatorOrder};
use crate::trace::{SpectrumTrace, TraceMetadata};

type C64 = Complex64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("integrator invariant violated: {quantity} drifted to {drift:e}")]
    InvariantViolation { quantity: &'static str, drift: f64 },
    #[error("density matrix invalid: {reason}")]
    InvalidState { reason: String },
    #[error("correlator has not decayed at the horizon (|c(T)|/|c(0)| = {ratio:e})")]
    TailNotDecayed { ratio: f64 },
    #[error("invalid oracle configuration: {reason}")]
    InvalidConfig { reason: String },
}

/// 2×2 complex operator in the (|e⟩, |g⟩) basis. Regression evolves
/// non-Hermitian operators, so this is more general than a state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Op2 {
    pub ee: C64,
    pub eg: C64,
    pub ge: C64,
    pub gg: C64,
}

impl Op2 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn scale(&self, f: f64) -> Self {
        Op2 {
            ee: self.ee * f,
            eg: self.eg * f,
            ge: self.ge * f,
            gg: self.gg * f,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Op2 {
            ee: self.ee + other.ee,
            eg: self.eg + other.eg,
            ge: self.ge + other.ge,
            gg: self.gg + other.gg,
        }
    }

    pub fn trace(&self) -> C64 {
        self.ee + self.gg
    }

    /// Tr[σ+ ·] = ge component; Tr[σ− ·] = eg component.
    pub fn expect_sigma_plus(&self) -> C64 {
        self.ge
    }

    pub fn expect_sigma_minus(&self) -> C64 {
        self.eg
    }

    pub fn expect_axis(&self, axis: Axis) -> C64 {
        match axis {
            Axis::X => self.eg + self.ge,
            Axis::Y => C64::i() * (self.eg - self.ge),
            Axis::Z => self.ee - self.gg,
        }
    }

    /// σ_a · self for a Pauli axis.
    pub fn pauli_left(&self, axis: Axis) -> Op2 {
        match axis {
            Axis::X => Op2 {
                ee: self.ge,
                eg: self.gg,
                ge: self.ee,
                gg: self.eg,
            },
            Axis::Y => Op2 {
                ee: -C64::i() * self.ge,
                eg: -C64::i() * self.gg,
                ge: C64::i() * self.ee,
                gg: C64::i() * self.eg,
            },
            Axis::Z => Op2 {
                ee: self.ee,
                eg: self.eg,
                ge: -self.ge,
                gg: -self.gg,
            },
        }
    }

    /// self · σ_a for a Pauli axis.
    pub fn pauli_right(&self, axis: Axis) -> Op2 {
        match axis {
            Axis::X => Op2 {
                ee: self.eg,
                eg: self.ee,
                ge: self.gg,
                gg: self.ge,
            },
            Axis::Y => Op2 {
                ee: C64::i() * self.eg,
                eg: -C64::i() * self.ee,
                ge: C64::i() * self.gg,
                gg: -C64::i() * self.ge,
            },
            Axis::Z => Op2 {
                ee: self.ee,
                eg: -self.eg,
                ge: self.ge,
                gg: -self.gg,
            },
        }
    }
}

/// A density matrix with validated Hermiticity, unit trace, and positivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix2(Op2);

impl DensityMatrix2 {
    pub fn new(op: Op2) -> Result<Self, OracleError> {
        let herm = (op.eg - op.ge.conj()).norm().max(op.ee.im.abs()).max(op.gg.im.abs());
        if herm > 1e-12 {
            return Err(OracleError::InvalidState {
                reason: format!("not Hermitian (deviation {herm:e})"),
            });
        }
        let trace = op.trace();
        if (trace.re - 1.0).abs() > 1e-12 || trace.im.abs() > 1e-12 {
            return Err(OracleError::InvalidState {
                reason: format!("trace {} is not one", trace),
            });
        }
        // Eigenvalues of a Hermitian 2×2: mean ± sqrt(mean² − det).
        let mean = 0.5 * (op.ee.re + op.gg.re);
        let det = op.ee.re * op.gg.re - op.eg.norm_sqr();
        let disc = (mean * mean - det).max(0.0).sqrt();
        if mean - disc < -1e-10 {
            return Err(OracleError::InvalidState {
                reason: format!("negative eigenvalue {:e}", mean - disc),
            });
        }
        Ok(Self(op))
    }

    pub fn ground() -> Self {
        Self(Op2 {
            gg: C64::new(1.0, 0.0),
            ..Op2::zero()
        })
    }

    pub fn from_bloch(sx: f64, sy: f64, sz: f64) -> Result<Self, OracleError> {
        Self::new(Op2 {
            ee: C64::new(0.5 * (1.0 + sz), 0.0),
            eg: C64::new(0.5 * sx, -0.5 * sy),
            ge: C64::new(0.5 * sx, 0.5 * sy),
            gg: C64::new(0.5 * (1.0 - sz), 0.0),
        })
    }

    pub fn op(&self) -> &Op2 {
        &self.0
    }

    pub fn bloch_vector(&self) -> (f64, f64, f64) {
        (
            self.0.expect_axis(Axis::X).re,
            self.0.expect_axis(Axis::Y).re,
            self.0.expect_axis(Axis::Z).re,
        )
    }
}

/// Quadrature rule for the one-sided Fourier integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuadratureMethod {
    /// Trapezoid rule on the sampled correlator plus a closed-form
    /// single-exponential tail fitted to the last decade of decay.
    #[default]
    TrapezoidWithTail,
    /// Zero-padded discrete transform evaluated on its natural grid and
    /// interpolated onto the requested one.
    Fft,
}

/// Fixed-step integration settings, in units of 1/γ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub step: f64,
    pub horizon: f64,
    pub quadrature: QuadratureMethod,
}

impl OracleConfig {
    pub fn new(step: f64, horizon: f64, quadrature: QuadratureMethod) -> Result<Self, OracleError> {
        if !(step > 0.0 && step.is_finite() && horizon > step && horizon.is_finite()) {
            return Err(OracleError::InvalidConfig {
                reason: format!("step {step}, horizon {horizon}"),
            });
        }
        Ok(Self {
            step,
            horizon,
            quadrature,
        })
    }

    /// Defaults for a parameter set: step = min(0.01/max rate, 0.005) and a
    /// horizon of 25 time constants of the slowest spectral mode.
    pub fn for_params(bath: &SqueezedBath, atom: &AtomParams) -> Self {
        let r = unit_rates(bath);
        let fastest = r.g_n.max(r.g_x).max(atom.rabi()).max(1.0);
        let step = (0.01 / fastest).min(0.005);
        let roots = crate::spectra::cubic_roots(bath, atom);
        let slowest = roots
            .iter()
            .map(|z| -z.re)
            .fold(f64::INFINITY, f64::min)
            .max(1e-3);
        Self {
            step,
            horizon: 25.0 / slowest,
            quadrature: QuadratureMethod::TrapezoidWithTail,
        }
    }
}

/// Right-hand side of the master equation in the rotating frame (γ = 1):
/// a resonant drive −i(Ω/2)[σx, ρ] plus ordinary decay at rate N+1, inverse
/// decay at rate N, and the phase-sensitive two-photon terms in M.
fn generator(op: &Op2, n: f64, m: C64, rabi: f64) -> Op2 {
    let i = C64::i();
    let half_drive = 0.5 * rabi;
    Op2 {
        ee: -(n + 1.0) * op.ee + n * op.gg - i * half_drive * (op.ge - op.eg),
        eg: -(n + 0.5) * op.eg - m * op.ge - i * half_drive * (op.gg - op.ee),
        ge: -(n + 0.5) * op.ge - m.conj() * op.eg - i * half_drive * (op.ee - op.gg),
        gg: (n + 1.0) * op.ee - n * op.gg - i * half_drive * (op.eg - op.ge),
    }
}

/// Master-equation derivative of a density matrix.
pub fn lindblad_rhs(rho: &DensityMatrix2, bath: &SqueezedBath, atom: &AtomParams) -> Op2 {
    generator(rho.op(), bath.n_photons(), bath.m_complex(), atom.rabi())
}

fn rk4_step(op: &Op2, h: f64, n: f64, m: C64, rabi: f64) -> Op2 {
    let k1 = generator(op, n, m, rabi);
    let k2 = generator(&op.add(&k1.scale(0.5 * h)), n, m, rabi);
    let k3 = generator(&op.add(&k2.scale(0.5 * h)), n, m, rabi);
    let k4 = generator(&op.add(&k3.scale(h)), n, m, rabi);
    op.add(
        &k1.add(&k2.scale(2.0))
            .add(&k3.scale(2.0))
            .add(&k4)
            .scale(h / 6.0),
    )
}

/// Classical fourth-order fixed-step integration of the master equation.
pub fn evolve(
    rho0: &DensityMatrix2,
    bath: &SqueezedBath,
    atom: &AtomParams,
    t: f64,
    config: &OracleConfig,
) -> Result<DensityMatrix2, OracleError> {
    if t == 0.0 {
        return Ok(*rho0);
    }
    let steps = (t / config.step).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let n = bath.n_photons();
    let m = bath.m_complex();
    let rabi = atom.rabi();
    let mut op = *rho0.op();
    for _ in 0..steps {
        op = rk4_step(&op, h, n, m, rabi);
    }
    let herm_drift = (op.eg - op.ge.conj()).norm();
    if herm_drift > 1e-8 {
        return Err(OracleError::InvariantViolation {
            quantity: "hermiticity",
            drift: herm_drift,
        });
    }
    let trace_drift = (op.trace() - C64::new(1.0, 0.0)).norm();
    if trace_drift > 1e-8 {
        return Err(OracleError::InvariantViolation {
            quantity: "trace",
            drift: trace_drift,
        });
    }
    // Squash integrator round-off so the state constructor accepts it.
    let norm = op.ee.re + op.gg.re;
    let sym = Op2 {
        ee: C64::new(op.ee.re / norm, 0.0),
        eg: 0.5 * (op.eg + op.ge.conj()) / norm,
        ge: 0.5 * (op.ge + op.eg.conj()) / norm,
        gg: C64::new(op.gg.re / norm, 0.0),
    };
    DensityMatrix2::new(sym)
}

/// Steady state by long integration from the ground state. The preparation
/// time is set by the slowest spectral mode, independent of the correlation
/// window in `config`, so short-window runs still start from a converged
/// state.
pub fn steady_state_numeric(
    bath: &SqueezedBath,
    atom: &AtomParams,
    config: &OracleConfig,
) -> Result<DensityMatrix2, OracleError> {
    let roots = crate::spectra::cubic_roots(bath, atom);
    let slowest = roots
        .iter()
        .map(|z| -z.re)
        .fold(f64::INFINITY, f64::min)
        .max(1e-3);
    let t = config.horizon.max(30.0 / slowest);
    evolve(&DensityMatrix2::ground(), bath, atom, t, config)
}

/// A uniformly sampled complex correlator.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorSeries {
    pub dt: f64,
    pub values: Vec<C64>,
}

impl CorrelatorSeries {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |k| k as f64 * self.dt)
    }
}

fn evolve_sampled(
    mut op: Op2,
    bath: &SqueezedBath,
    atom: &AtomParams,
    config: &OracleConfig,
    mut read: impl FnMut(&Op2) -> C64,
) -> CorrelatorSeries {
    let steps = (config.horizon / config.step).ceil().max(1.0) as usize;
    let h = config.horizon / steps as f64;
    let n = bath.n_photons();
    let m = bath.m_complex();
    let rabi = atom.rabi();
    let mut values = Vec::with_capacity(steps + 1);
    values.push(read(&op));
    for _ in 0..steps {
        op = rk4_step(&op, h, n, m, rabi);
        values.push(read(&op));
    }
    CorrelatorSeries { dt: h, values }
}

/// ⟨σ_a(t) σ_b(0)⟩ (EvolvedLeft) or ⟨σ_a(0) σ_b(t)⟩ (EvolvedRight) on a
/// uniform time grid: the regression theorem evolves σ_b ρ_ss (respectively
/// ρ_ss σ_a) under the full generator and traces with the other operator.
pub fn regression_correlator(
    a: Axis,
    b: Axis,
    order: CorrelatorOrder,
    bath: &SqueezedBath,
    atom: &AtomParams,
    config: &OracleConfig,
) -> Result<CorrelatorSeries, OracleError> {
    let rho = steady_state_numeric(bath, atom, config)?;
    let (initial, read_axis) = match order {
        CorrelatorOrder::EvolvedLeft => (rho.op().pauli_left(b), a),
        CorrelatorOrder::EvolvedRight => (rho.op().pauli_right(a), b),
    };
    Ok(evolve_sampled(initial, bath, atom, config, |op| {
        sigma_times_trace(read_axis, op)
    }))
}

/// Tr[σ_axis · op].
fn sigma_times_trace(axis: Axis, op: &Op2) -> C64 {
    op.pauli_left(axis).trace()
}

/// Ladder-operator analogue of [`regression_correlator`]: the evolved and
/// fixed operators are σ+ or σ− as selected by the flags.
pub fn regression_ladder_correlator(
    evolved_plus: bool,
    fixed_plus: bool,
    order: CorrelatorOrder,
    bath: &SqueezedBath,
    atom: &AtomParams,
    config: &OracleConfig,
) -> Result<CorrelatorSeries, OracleError> {
    let rho = steady_state_numeric(bath, atom, config)?;
    let fixed = if fixed_plus { Ladder::Plus } else { Ladder::Minus };
    let initial = match order {
        CorrelatorOrder::EvolvedLeft => ladder_left(rho.op(), fixed),
        CorrelatorOrder::EvolvedRight => ladder_right(rho.op(), fixed),
    };
    // Tr[σ± X] picks the opposite off-diagonal element.
    Ok(evolve_sampled(initial, bath, atom, config, |op| {
        if evolved_plus {
            op.ge
        } else {
            op.eg
        }
    }))
}

enum Ladder {
    Plus,
    Minus,
}

fn ladder_left(op: &Op2, which: Ladder) -> Op2 {
    // σ+ = |e⟩⟨g|, σ− = |g⟩⟨e|.
    match which {
        Ladder::Plus => Op2 {
            ee: op.ge,
            eg: op.gg,
            ..Op2::zero()
        },
        Ladder::Minus => Op2 {
            ge: op.ee,
            gg: op.eg,
            ..Op2::zero()
        },
    }
}

fn ladder_right(op: &Op2, which: Ladder) -> Op2 {
    match which {
        Ladder::Plus => Op2 {
            eg: op.ee,
            gg: op.ge,
            ..Op2::zero()
        },
        Ladder::Minus => Op2 {
            ee: op.eg,
            ge: op.gg,
            ..Op2::zero()
        },
    }
}

/// Fit a single exponential to the last decade of a decaying complex series
/// and return (c(T), T, λ). Consecutive-ratio averaging is enough here
/// because the tail is a vanishing correction by construction; a `None`
/// simply drops the correction.
fn fit_exponential_tail(series: &[C64], dt: f64) -> Option<(C64, f64, C64)> {
    let n = series.len();
    if n < 16 {
        return None;
    }
    let last = series[n - 1].norm();
    if last == 0.0 {
        return None;
    }
    // Walk back until the envelope grew by 10×.
    let mut start = n - 1;
    while start > 0 && series[start - 1].norm() < 10.0 * last {
        start -= 1;
    }
    if n - start < 8 {
        start = n.saturating_sub(8);
    }
    let window = &series[start..];
    let mut log_ratio = C64::default();
    let mut count = 0usize;
    for k in 1..window.len() {
        if window[k - 1].norm() == 0.0 || window[k].norm() == 0.0 {
            return None;
        }
        log_ratio += (window[k] / window[k - 1]).ln();
        count += 1;
    }
    let lambda = log_ratio / (count as f64 * dt);
    // Reject non-decaying or absurd rates (a rounding-floor tail produces
    // garbage ratios); the remaining tail is then negligible anyway.
    if lambda.re >= 0.0 || lambda.re.is_nan() || lambda.norm() * dt > 1.0 {
        return None;
    }
    let t_end = (n - 1) as f64 * dt;
    Some((series[n - 1], t_end, lambda))
}

/// One-sided transform (1/π) Re ∫₀^∞ c(t) e^{iωt} dt of a sampled series by
/// trapezoid rule, with the analytic integral of the fitted tail appended.
fn one_sided_transform(series: &CorrelatorSeries, grid: &[f64], quadrature: QuadratureMethod) -> Vec<f64> {
    match quadrature {
        QuadratureMethod::TrapezoidWithTail => {
            let tail = fit_exponential_tail(&series.values, series.dt);
            grid.iter()
                .map(|&w| {
                    let rot = C64::from_polar(1.0, w * series.dt);
                    let mut phase = C64::new(1.0, 0.0);
                    let mut acc = C64::default();
                    for (k, c) in series.values.iter().enumerate() {
                        let weight = if k == 0 || k == series.values.len() - 1 {
                            0.5
                        } else {
                            1.0
                        };
                        acc += c * phase * weight;
                        phase *= rot;
                    }
                    let mut integral = acc * series.dt;
                    if let Some((end_value, t_end, lambda)) = tail {
                        // ∫_T^∞ c(T) e^{λ(t−T)} e^{iωt} dt, anchored at the
                        // horizon sample so no large exponentials appear.
                        let pole = lambda + C64::new(0.0, w);
                        integral += -end_value * C64::from_polar(1.0, w * t_end) / pole;
                    }
                    integral.re / std::f64::consts::PI
                })
                .collect()
        }
        QuadratureMethod::Fft => fft_transform(series, grid),
    }
}

/// Zero-padded DFT evaluated on the natural frequency grid, linearly
/// interpolated onto the requested offsets.
fn fft_transform(series: &CorrelatorSeries, grid: &[f64]) -> Vec<f64> {
    let n = (series.values.len() * 2).next_power_of_two();
    let mut padded = vec![C64::default(); n];
    for (k, c) in series.values.iter().enumerate() {
        let weight = if k == 0 || k == series.values.len() - 1 {
            0.5
        } else {
            1.0
        };
        padded[k] = c * weight;
    }
    // Σ_k c_k e^{+2πi jk/n} is an unnormalized inverse DFT.
    let mut planner = rustfft::FftPlanner::new();
    let fft = planner.plan_fft_inverse(n);
    fft.process(&mut padded);
    let d_omega = 2.0 * std::f64::consts::PI / (n as f64 * series.dt);
    let value_at = |j: usize| padded[j % n] * series.dt / std::f64::consts::PI;
    grid.iter()
        .map(|&w| {
            let x = w / d_omega;
            let base = x.floor();
            let frac = x - base;
            let j = base.rem_euclid(n as f64) as usize;
            let lo = value_at(j).re;
            let hi = value_at(j + 1).re;
            lo + frac * (hi - lo)
        })
        .collect()
}

/// Numeric fluorescence spectrum: sample ⟨σ+(t)σ−(0)⟩ by regression,
/// subtract its factorized long-time limit, and transform. Errors if the
/// correlator has not decayed below 1e−6 of its initial value at the
/// horizon.
pub fn spectrum_numeric(
    bath: &SqueezedBath,
    atom: &AtomParams,
    grid: &[f64],
    config: &OracleConfig,
) -> Result<SpectrumTrace, OracleError> {
    let rho = steady_state_numeric(bath, atom, config)?;
    spectrum_numeric_with_state(&rho, bath, atom, grid, config)
}

/// Same as [`spectrum_numeric`] with the steady state already in hand.
pub fn spectrum_numeric_with_state(
    rho: &DensityMatrix2,
    bath: &SqueezedBath,
    atom: &AtomParams,
    grid: &[f64],
    config: &OracleConfig,
) -> Result<SpectrumTrace, OracleError> {
    let coherent = rho.op().expect_sigma_plus() * rho.op().expect_sigma_minus();
    let initial = ladder_left(rho.op(), Ladder::Minus);
    let mut series = evolve_sampled(initial, bath, atom, config, |op| op.ge);
    for c in series.values.iter_mut() {
        *c -= coherent;
    }
    let scale = series.values[0].norm();
    if scale > 1e-30 {
        let ratio = series.values.last().unwrap().norm() / scale;
        if ratio > 1e-6 {
            return Err(OracleError::TailNotDecayed { ratio });
        }
    } else {
        let values = vec![0.0; grid.len()];
        return Ok(SpectrumTrace::new(grid.to_vec(), values, TraceMetadata::default())
            .expect("grid validated by caller"));
    }
    let values = one_sided_transform(&series, grid, config.quadrature);
    Ok(SpectrumTrace::new(grid.to_vec(), values, TraceMetadata::default())
        .expect("grid validated by caller"))
}

/// Reflection spectrum rebuilt entirely from numeric correlators, used to
/// validate the operator-ordering bookkeeping of the analytic version.
pub fn reflection_numeric(
    bath: &SqueezedBath,
    atom: &AtomParams,
    grid: &[f64],
    config: &OracleConfig,
) -> Result<Vec<f64>, OracleError> {
    let rho = steady_state_numeric(bath, atom, config)?;
    let n = bath.n_photons();
    let m = bath.m_complex();
    let eta_c = atom.eta_c();

    let sp = rho.op().expect_sigma_plus();
    let sm = rho.op().expect_sigma_minus();

    let mut fluor = evolve_sampled(ladder_left(rho.op(), Ladder::Minus), bath, atom, config, |op| op.ge);
    let mut plus_later = evolve_sampled(ladder_right(rho.op(), Ladder::Plus), bath, atom, config, |op| op.ge);
    let mut plus_earlier = evolve_sampled(ladder_left(rho.op(), Ladder::Plus), bath, atom, config, |op| op.ge);
    let mut minus_then_plus =
        evolve_sampled(ladder_right(rho.op(), Ladder::Minus), bath, atom, config, |op| op.ge);

    for c in fluor.values.iter_mut() {
        *c -= sp * sm;
    }
    for c in plus_later.values.iter_mut() {
        *c -= sp * sp;
    }
    for c in plus_earlier.values.iter_mut() {
        *c -= sp * sp;
    }
    for c in minus_then_plus.values.iter_mut() {
        *c -= sm * sp;
    }

    let fluor_part = one_sided_transform(&fluor, grid, config.quadrature);
    let c_part = one_sided_transform(&minus_then_plus, grid, QuadratureMethod::TrapezoidWithTail);
    // The complex squeezing phase must multiply the integrand before the
    // real part is taken, so fold it into the series.
    let mut m_combined = plus_later;
    for (x, y) in m_combined.values.iter_mut().zip(&plus_earlier.values) {
        *x = m * (*x - *y);
    }
    let m_part = one_sided_transform(&m_combined, grid, QuadratureMethod::TrapezoidWithTail);

    Ok(grid
        .iter()
        .enumerate()
        .map(|(i, _)| {
            n / (2.0 * std::f64::consts::PI * eta_c) + (n + eta_c) * fluor_part[i] + m_part[i]
                - n * c_part[i]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra;
    use approx::assert_relative_eq;

    fn atom(rabi: f64) -> AtomParams {
        AtomParams::new(1.0, 1.0, rabi).unwrap()
    }

    fn config(bath: &SqueezedBath, a: &AtomParams) -> OracleConfig {
        OracleConfig::for_params(bath, a)
    }

    #[test]
    fn ground_state_is_vacuum_fixed_point() {
        let bath = SqueezedBath::vacuum();
        let rho = DensityMatrix2::ground();
        let dot = lindblad_rhs(&rho, &bath, &atom(0.0));
        assert!(dot.ee.norm() + dot.eg.norm() + dot.ge.norm() + dot.gg.norm() < 1e-15);
    }

    #[test]
    fn derivative_is_traceless() {
        let bath = SqueezedBath::new(0.7, 0.8, 0.5).unwrap();
        let rho = DensityMatrix2::from_bloch(0.21, -0.35, 0.4).unwrap();
        let dot = lindblad_rhs(&rho, &bath, &atom(2.0));
        assert!(dot.trace().norm() < 1e-14);
    }

    #[test]
    fn derivative_matches_bloch_equations() {
        let bath = SqueezedBath::new(0.7, 0.8, 0.5).unwrap();
        let a = atom(2.0);
        let rho = DensityMatrix2::from_bloch(0.2, -0.3, 0.1).unwrap();
        let dot = lindblad_rhs(&rho, &bath, &a);
        let b = spectra::bloch_matrix(&bath, &a);
        let v = nalgebra::Vector3::new(0.2, -0.3, 0.1);
        let expected = b * v - nalgebra::Vector3::new(0.0, 0.0, 1.0);
        assert_relative_eq!(dot.expect_axis(Axis::X).re, expected[0], epsilon = 1e-12);
        assert_relative_eq!(dot.expect_axis(Axis::Y).re, expected[1], epsilon = 1e-12);
        assert_relative_eq!(dot.expect_axis(Axis::Z).re, expected[2], epsilon = 1e-12);
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            assert!(dot.expect_axis(axis).im.abs() < 1e-14);
        }
    }

    #[test]
    fn decay_to_ground_in_plain_vacuum() {
        let bath = SqueezedBath::vacuum();
        let a = atom(0.0);
        let cfg = OracleConfig::new(0.005, 60.0, QuadratureMethod::TrapezoidWithTail).unwrap();
        let rho0 = DensityMatrix2::from_bloch(0.6, 0.0, 0.5).unwrap();
        let rho = evolve(&rho0, &bath, &a, 50.0, &cfg).unwrap();
        let (x, y, z) = rho.bloch_vector();
        assert!(x.abs() < 1e-8 && y.abs() < 1e-8 && (z + 1.0).abs() < 1e-8);
    }

    #[test]
    fn long_time_limit_matches_closed_form_steady_state() {
        let bath = SqueezedBath::new(0.5, 0.6, std::f64::consts::FRAC_PI_4).unwrap();
        let a = atom(2.0);
        let cfg = config(&bath, &a);
        let rho = steady_state_numeric(&bath, &a, &cfg).unwrap();
        let s = spectra::steady_state(&bath, &a).unwrap();
        let (x, y, z) = rho.bloch_vector();
        assert!((x - s.sx).abs() < 1e-8, "{x} vs {}", s.sx);
        assert!((y - s.sy).abs() < 1e-8);
        assert!((z - s.sz).abs() < 1e-8);
    }

    #[test]
    fn integrator_is_fourth_order() {
        let bath = SqueezedBath::new(0.4, 0.5, 0.3).unwrap();
        let a = atom(1.5);
        let rho0 = DensityMatrix2::ground();
        let t = 1.0;
        let run = |h: f64| {
            let cfg = OracleConfig::new(h, 10.0, QuadratureMethod::TrapezoidWithTail).unwrap();
            evolve(&rho0, &bath, &a, t, &cfg).unwrap().bloch_vector()
        };
        let reference = run(1e-4);
        let err = |v: (f64, f64, f64)| {
            ((v.0 - reference.0).powi(2) + (v.1 - reference.1).powi(2) + (v.2 - reference.2).powi(2)).sqrt()
        };
        let e1 = err(run(0.02));
        let e2 = err(run(0.01));
        let ratio = e1 / e2;
        assert!(
            (ratio - 16.0).abs() < 0.2 * 16.0,
            "step halving gave error ratio {ratio}"
        );
    }

    #[test]
    fn regression_initial_sample_is_pauli_moment() {
        let bath = SqueezedBath::new(0.5, 0.6, 0.4).unwrap();
        let a = atom(2.0);
        let cfg = config(&bath, &a);
        let series = regression_correlator(Axis::X, Axis::Y, CorrelatorOrder::EvolvedLeft, &bath, &a, &cfg).unwrap();
        let s = spectra::steady_state(&bath, &a).unwrap();
        // ⟨σx σy⟩ = i⟨σz⟩.
        let expect = C64::new(0.0, s.sz);
        assert!((series.values[0] - expect).norm() < 1e-9);
    }

    #[test]
    fn fft_and_trapezoid_agree() {
        let bath = SqueezedBath::new(0.3, 0.4, 0.9).unwrap();
        let a = atom(3.0);
        let mut cfg = config(&bath, &a);
        let grid: Vec<f64> = (-20..=20).map(|k| k as f64 * 0.35).collect();
        let trap = spectrum_numeric(&bath, &a, &grid, &cfg).unwrap();
        cfg.quadrature = QuadratureMethod::Fft;
        let fft = spectrum_numeric(&bath, &a, &grid, &cfg).unwrap();
        let peak = trap.values().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        for (t, f) in trap.values().iter().zip(fft.values()) {
            assert!((t - f).abs() < 2e-2 * peak, "{t} vs {f}");
        }
    }
}
