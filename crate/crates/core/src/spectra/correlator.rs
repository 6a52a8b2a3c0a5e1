//! Two-time steady-state correlators in closed form.
//!
//! The quantum regression theorem propagates any Pauli correlator with the
//! same drift matrix B as the single-time Bloch equations, so the Laplace
//! resolvent (s − B)⁻¹ = adj(s)/D(s) turns every correlator into a sum of
//! three exponentials e^{λ_j t} plus a constant, where λ_j are the roots of
//! the cubic D(s). Everything here is in units of γ.

use num_complex::Complex64;

use super::roots::{cubic_coefficients, min_separation, solve_monic_cubic};
use super::steady::{steady_state, BlochState};
use super::{SpectraError, ROOT_DEGENERACY_TOL};
use crate::model::{unit_rates, AtomParams, RateSet, SqueezedBath};

/// Pauli axis label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Which operator carries the time argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelatorOrder {
    /// ⟨A(t) B(0)⟩: the evolved operator stands left of the fixed one.
    EvolvedLeft,
    /// ⟨A(0) B(t)⟩: the evolved operator stands right of the fixed one.
    EvolvedRight,
}

/// A correlator in the form Σ_j c_j e^{λ_j t} + c_∞.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpSum {
    pub rates: [Complex64; 3],
    pub coefficients: [Complex64; 3],
    pub constant: Complex64,
    /// Set when the drive amplitude was nudged to split near-degenerate
    /// resolvent roots.
    pub perturbed: bool,
}

impl ExpSum {
    pub fn eval(&self, t: f64) -> Complex64 {
        let mut acc = self.constant;
        for (c, lam) in self.coefficients.iter().zip(&self.rates) {
            acc += c * (lam * t).exp();
        }
        acc
    }

    /// (1/π) Re ∫₀^∞ dt e^{iωt} Σ_j c_j e^{λ_j t}, the sampled part of the
    /// one-sided transform. The constant term belongs to a δ(ω) line and is
    /// deliberately excluded.
    pub fn re_transform(&self, omega: f64) -> f64 {
        let mut acc = 0.0;
        for (c, lam) in self.coefficients.iter().zip(&self.rates) {
            acc += lorentzian_dispersive(*c, *lam, omega);
        }
        acc / std::f64::consts::PI
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for c in out.coefficients.iter_mut() {
            *c *= factor;
        }
        out.constant *= factor;
        out
    }

    /// Combine term-wise; both operands must share the same root triple.
    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.rates, other.rates);
        let mut out = self.clone();
        for (c, o) in out.coefficients.iter_mut().zip(&other.coefficients) {
            *c += o;
        }
        out.constant += other.constant;
        out.perturbed |= other.perturbed;
        out
    }
}

/// −[Re(k)·Re(λ) + Im(k)·(ω + Im(λ))] / [Re(λ)² + (ω + Im(λ))²], the real
/// part of −k/(λ + iω): a Lorentzian of half width |Re λ| carrying a
/// dispersive correction linear in frequency.
pub(crate) fn lorentzian_dispersive(k: Complex64, lam: Complex64, omega: f64) -> f64 {
    let shifted = omega + lam.im;
    -(k.re * lam.re + k.im * shifted) / (lam.re * lam.re + shifted * shifted)
}

/// Everything needed to assemble correlators for one parameter set.
pub(crate) struct RegressionContext {
    pub roots: [Complex64; 3],
    partial: [Complex64; 3],
    rates: RateSet,
    rabi: f64,
    pub state: BlochState,
    pub perturbed: bool,
}

impl RegressionContext {
    pub fn new(bath: &SqueezedBath, atom: &AtomParams) -> Result<Self, SpectraError> {
        let rates = unit_rates(bath);
        let state = steady_state(bath, atom)?;
        let mut rabi = atom.rabi();
        let mut perturbed = false;
        let mut roots = solve_monic_cubic(&cubic_coefficients(&rates, rabi));
        let mut separation = min_separation(&roots);
        if separation < ROOT_DEGENERACY_TOL {
            // Near-degenerate roots make the partial-fraction coefficients
            // blow up; nudging the drive splits them while moving the
            // spectrum far less than plot or fit resolution. The nudge is
            // escalated because the splitting grows only quadratically in
            // the drive near the undriven double root.
            perturbed = true;
            let mut delta = 1e-6;
            loop {
                rabi = atom.rabi() + delta;
                roots = solve_monic_cubic(&cubic_coefficients(&rates, rabi));
                separation = min_separation(&roots);
                if separation >= ROOT_DEGENERACY_TOL {
                    break;
                }
                delta *= 10.0;
                if delta > 1e-2 {
                    return Err(SpectraError::DegenerateRoots { separation });
                }
            }
        }
        let partial = [
            ((roots[0] - roots[1]) * (roots[0] - roots[2])).inv(),
            ((roots[1] - roots[0]) * (roots[1] - roots[2])).inv(),
            ((roots[2] - roots[0]) * (roots[2] - roots[1])).inv(),
        ];
        Ok(Self {
            roots,
            partial,
            rates,
            rabi,
            state,
            perturbed,
        })
    }

    /// Entry (row, col) of adj(s) = D(s) (s − B)⁻¹ for the drift matrix B.
    fn adjugate(&self, s: Complex64, row: usize, col: usize) -> Complex64 {
        let r = &self.rates;
        let w = self.rabi;
        match (row, col) {
            (0, 0) => (s + r.g_minus) * (s + r.g_n) + w * w,
            (0, 1) | (1, 0) => r.g_m * (s + r.g_n),
            (0, 2) => Complex64::new(-r.g_m * w, 0.0),
            (1, 1) => (s + r.g_n) * (s + r.g_plus),
            (1, 2) => -(s + r.g_plus) * w,
            (2, 0) => Complex64::new(r.g_m * w, 0.0),
            (2, 1) => (s + r.g_plus) * w,
            (2, 2) => (s + r.g_minus) * (s + r.g_plus) - r.g_m * r.g_m,
            _ => unreachable!("3x3 adjugate index"),
        }
    }

    fn steady_component(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.state.sx,
            Axis::Y => self.state.sy,
            Axis::Z => self.state.sz,
        }
    }

    /// ⟨σ_a σ_b⟩ at equal times from the Pauli algebra
    /// σ_a σ_b = δ_ab + i ε_abc σ_c.
    fn pauli_moment(&self, a: Axis, b: Axis) -> Complex64 {
        use Axis::*;
        let i = Complex64::i();
        match (a, b) {
            (X, X) | (Y, Y) | (Z, Z) => Complex64::new(1.0, 0.0),
            (X, Y) => i * self.state.sz,
            (Y, X) => -i * self.state.sz,
            (Y, Z) => i * self.state.sx,
            (Z, Y) => -i * self.state.sx,
            (Z, X) => i * self.state.sy,
            (X, Z) => -i * self.state.sy,
        }
    }

    /// Closed form for a single Pauli-axis correlator. `read` is the evolved
    /// operator, `fixed` the one pinned at t = 0; `order` places the fixed
    /// operator right (⟨read(t) fixed(0)⟩) or left (⟨fixed(0) read(t)⟩) and
    /// only affects the equal-time moments fed into the regression system.
    pub fn axis_term(&self, read: Axis, fixed: Axis, order: CorrelatorOrder) -> ExpSum {
        let axes = [Axis::X, Axis::Y, Axis::Z];
        let row = match read {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        };
        let moments: Vec<Complex64> = axes
            .iter()
            .map(|&k| match order {
                CorrelatorOrder::EvolvedLeft => self.pauli_moment(k, fixed),
                CorrelatorOrder::EvolvedRight => self.pauli_moment(fixed, k),
            })
            .collect();
        let s_fixed = self.steady_component(fixed);
        let s_read = self.steady_component(read);

        let mut coefficients = [Complex64::default(); 3];
        for (j, coefficient) in coefficients.iter_mut().enumerate() {
            let lam = self.roots[j];
            let mut inner = Complex64::default();
            for (k, m) in moments.iter().enumerate() {
                inner += self.adjugate(lam, row, k) * m;
            }
            // Inhomogeneous decay feeds the z row: subtract γ⟨σ_fixed⟩/s in
            // the Laplace domain, which lands on adj(λ)/λ per residue.
            inner -= self.adjugate(lam, row, 2) / lam * s_fixed;
            *coefficient = self.partial[j] * inner;
        }
        ExpSum {
            rates: self.roots,
            coefficients,
            constant: Complex64::new(s_read * s_fixed, 0.0),
            perturbed: self.perturbed,
        }
    }

    /// Correlator of two ladder operators σ± = (σx ± iσy)/2, assembled from
    /// the four quadrature terms.
    pub fn ladder_term(&self, evolved_plus: bool, fixed_plus: bool, order: CorrelatorOrder) -> ExpSum {
        let weight = |plus: bool, axis: Axis| -> Complex64 {
            match (axis, plus) {
                (Axis::X, _) => Complex64::new(0.5, 0.0),
                (Axis::Y, true) => Complex64::new(0.0, 0.5),
                (Axis::Y, false) => Complex64::new(0.0, -0.5),
                (Axis::Z, _) => unreachable!(),
            }
        };
        let mut acc: Option<ExpSum> = None;
        for read in [Axis::X, Axis::Y] {
            for fixed in [Axis::X, Axis::Y] {
                let w = weight(evolved_plus, read) * weight(fixed_plus, fixed);
                let term = self.axis_term(read, fixed, order).scaled(w);
                acc = Some(match acc {
                    None => term,
                    Some(prev) => prev.add(&term),
                });
            }
        }
        acc.expect("four quadrature terms")
    }
}

/// Closed form of ⟨σ_a(t) σ_b(0)⟩ (or the opposite ordering) as coefficients
/// over {e^{λ_j t}} plus the factorized constant ⟨σ_a⟩⟨σ_b⟩.
pub fn correlator(
    a: Axis,
    b: Axis,
    order: CorrelatorOrder,
    bath: &SqueezedBath,
    atom: &AtomParams,
) -> Result<ExpSum, SpectraError> {
    let ctx = RegressionContext::new(bath, atom)?;
    Ok(match order {
        CorrelatorOrder::EvolvedLeft => ctx.axis_term(a, b, order),
        CorrelatorOrder::EvolvedRight => ctx.axis_term(b, a, order),
    })
}

/// Closed form of a ladder-operator correlator: ⟨σ_e(t) σ_f(0)⟩ for
/// `EvolvedLeft`, ⟨σ_f(0) σ_e(t)⟩ for `EvolvedRight`, where each operator is
/// σ+ or σ− as selected by the flags.
pub fn ladder_correlator(
    evolved_plus: bool,
    fixed_plus: bool,
    order: CorrelatorOrder,
    bath: &SqueezedBath,
    atom: &AtomParams,
) -> Result<ExpSum, SpectraError> {
    let ctx = RegressionContext::new(bath, atom)?;
    Ok(ctx.ladder_term(evolved_plus, fixed_plus, order))
}

/// The fluorescence correlator ⟨σ+(t)σ−(0)⟩ = Σ_j K_j e^{λ_j t} + K: roots,
/// incoherent amplitudes, and the coherent (elastic) weight K = |⟨σ−⟩|².
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub roots: [Complex64; 3],
    pub amplitudes: [Complex64; 3],
    pub coherent_weight: Complex64,
    pub perturbed: bool,
}

impl SpectralDecomposition {
    /// Incoherent spectrum sample: a sum of three Lorentzians of half width
    /// |Re λ_j| with dispersive corrections linear in frequency. The δ(ω)
    /// line of weight `coherent_weight` is never sampled.
    pub fn sample(&self, omega: f64) -> f64 {
        let mut acc = 0.0;
        for (k, lam) in self.amplitudes.iter().zip(&self.roots) {
            acc += lorentzian_dispersive(*k, *lam, omega);
        }
        acc / std::f64::consts::PI
    }

    /// K₀ + K₁ + K₂ + K, which must equal the excited population (1+⟨σz⟩)/2.
    pub fn sum_rule_total(&self) -> Complex64 {
        self.amplitudes.iter().sum::<Complex64>() + self.coherent_weight
    }
}

pub fn decompose(bath: &SqueezedBath, atom: &AtomParams) -> Result<SpectralDecomposition, SpectraError> {
    let ctx = RegressionContext::new(bath, atom)?;
    let sum = ctx.ladder_term(true, false, CorrelatorOrder::EvolvedLeft);
    Ok(SpectralDecomposition {
        roots: sum.rates,
        amplitudes: sum.coefficients,
        coherent_weight: sum.constant,
        perturbed: sum.perturbed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn atom(rabi: f64) -> AtomParams {
        AtomParams::new(1.0, 1.0, rabi).unwrap()
    }

    fn bath() -> SqueezedBath {
        SqueezedBath::new(0.5, 0.6, std::f64::consts::FRAC_PI_4).unwrap()
    }

    #[test]
    fn initial_value_reproduces_pauli_products() {
        let ctx = RegressionContext::new(&bath(), &atom(2.0)).unwrap();
        for a in [Axis::X, Axis::Y, Axis::Z] {
            for b in [Axis::X, Axis::Y, Axis::Z] {
                let left = ctx.axis_term(a, b, CorrelatorOrder::EvolvedLeft);
                let expect = ctx.pauli_moment(a, b);
                let got = left.eval(0.0);
                assert!((got - expect).norm() < 1e-12, "{a:?}{b:?}: {got} vs {expect}");

                let right = ctx.axis_term(b, a, CorrelatorOrder::EvolvedRight);
                let expect = ctx.pauli_moment(a, b);
                let got = right.eval(0.0);
                assert!((got - expect).norm() < 1e-12, "{a:?}{b:?} rev: {got} vs {expect}");
            }
        }
    }

    #[test]
    fn long_time_factorization() {
        let b = bath();
        let a = atom(1.5);
        let state = steady_state(&b, &a).unwrap();
        let c = correlator(Axis::Y, Axis::Z, CorrelatorOrder::EvolvedLeft, &b, &a).unwrap();
        let asymptote = c.eval(200.0);
        assert!((asymptote.re - state.sy * state.sz).abs() < 1e-10);
        assert!(asymptote.im.abs() < 1e-10);
    }

    #[test]
    fn sum_rule_and_coherent_weight() {
        for (n, m, phi, w) in [
            (0.0, 0.0, 0.0, 5.0),
            (0.5, 0.6, 0.3, 2.0),
            (2.0, 2.2, 1.2, 7.5),
            (0.2, 0.4472, std::f64::consts::FRAC_PI_2, 4.0),
        ] {
            let b = SqueezedBath::new(n, m, phi).unwrap();
            let a = atom(w);
            let d = decompose(&b, &a).unwrap();
            let state = steady_state(&b, &a).unwrap();
            let total = d.sum_rule_total();
            assert!(
                (total.re - state.excited_population()).abs() < 1e-10,
                "sum rule: {total} vs {}",
                state.excited_population()
            );
            assert!(total.im.abs() < 1e-10);
            // Elastic weight is the coherent dipole power.
            let k = d.coherent_weight;
            assert!((k.re - state.sigma_minus().norm_sqr()).abs() < 1e-12);
            assert!(k.im.abs() < 1e-12);
        }
    }

    #[test]
    fn conjugate_pair_amplitudes_in_aligned_limit() {
        // With the squeezing axis aligned to the drive the off-axis rate
        // vanishes and the sideband amplitudes pair up conjugately. (At
        // generic phases they provably do not; see the frozen-value test.)
        for phi in [0.0, std::f64::consts::FRAC_PI_2] {
            let b = SqueezedBath::new(0.4, 0.5, phi).unwrap();
            let d = decompose(&b, &atom(6.0)).unwrap();
            let mut found = false;
            for i in 0..3 {
                for j in (i + 1)..3 {
                    if (d.roots[i] - d.roots[j].conj()).norm() < 1e-12 && d.roots[i].im != 0.0 {
                        assert!((d.amplitudes[i] - d.amplitudes[j].conj()).norm() < 1e-10);
                        found = true;
                    }
                }
            }
            assert!(found, "driven squeezed case should have a complex pair");
        }
    }

    #[test]
    fn matches_independent_eigenmode_decomposition() {
        // Frozen values from an independent dense-Liouvillian computation
        // (matrix exponential of the vectorized master equation) at
        // N = 0.4, |M| = 0.5, Φ = 0.9, Ω = 6.
        let b = SqueezedBath::new(0.4, 0.5, 0.9).unwrap();
        let ctx = RegressionContext::new(&b, &atom(6.0)).unwrap();
        let c = ctx.ladder_term(true, false, CorrelatorOrder::EvolvedLeft);
        let expect = [
            (0.0, Complex64::new(0.49044967119317096, 0.0)),
            (0.1, Complex64::new(0.4322023323168118, 0.012366306602666325)),
            (0.5, Complex64::new(0.065128455589659, 0.0030023129409513767)),
            (1.0, Complex64::new(0.17234953718052806, -0.001683211548077952)),
            (3.0, Complex64::new(0.03405682506272088, -0.00021414812102738727)),
        ];
        for (t, want) in expect {
            let got = c.eval(t);
            assert!((got - want).norm() < 1e-10, "t={t}: {got} vs {want}");
        }
    }

    #[test]
    fn undriven_vacuum_is_dark() {
        let d = decompose(&SqueezedBath::vacuum(), &atom(0.0)).unwrap();
        assert!(d.perturbed, "undriven degenerate case must be flagged");
        for k in d.amplitudes {
            assert!(k.norm() < 1e-9);
        }
        assert!(d.coherent_weight.norm() < 1e-12);
    }

    #[test]
    fn threshold_drive_is_perturbed_but_finite() {
        // At (γ_- - γ_N)² = 4Ω² the sideband roots collide.
        let d = decompose(&SqueezedBath::vacuum(), &atom(0.25)).unwrap();
        assert!(d.perturbed);
        let s = d.sample(0.3);
        assert!(s.is_finite() && s > 0.0);
    }

    #[test]
    fn undriven_squeezed_correlator_splits_into_quadrature_rates() {
        // With no drive the x/y quadratures decay at γ_x and γ_y and the
        // fluorescence correlator weights them equally.
        let b = SqueezedBath::new(0.3, 0.5, 0.7).unwrap();
        let a = atom(0.0);
        let d = decompose(&b, &a).unwrap();
        let r = crate::model::unit_rates(&b);
        let mut res: Vec<f64> = d.roots.iter().map(|z| -z.re).collect();
        res.sort_by(f64::total_cmp);
        let mut expect = [r.g_y, r.g_x, r.g_n];
        expect.sort_by(f64::total_cmp);
        for (got, want) in res.iter().zip(expect.iter()) {
            assert_relative_eq!(got, want, epsilon = 1e-8);
        }
        let state = steady_state(&b, &a).unwrap();
        let weight = state.excited_population() / 2.0;
        for (k, lam) in d.amplitudes.iter().zip(&d.roots) {
            if (-lam.re - r.g_n).abs() < 1e-6 {
                assert!(k.norm() < 1e-10);
            } else {
                assert_abs_diff_eq!(k.re, weight, epsilon = 1e-8);
                assert_abs_diff_eq!(k.im, 0.0, epsilon = 1e-8);
            }
        }
    }
}
