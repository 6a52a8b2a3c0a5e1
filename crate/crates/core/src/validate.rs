//! Batch equivalence runs between the closed-form spectra and the
//! master-equation oracle, over seeded random parameter draws.

use std::f64::consts::PI;
use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{AtomParams, SqueezedBath};
use crate::oracle::{spectrum_numeric_with_state, steady_state_numeric, OracleConfig, OracleError};
use crate::spectra;
use crate::trace::symmetric_grid;

/// One random parameter set: effective reservoir moments diluted by the
/// port efficiency, plus the atom carrying that efficiency and the drive.
#[derive(Debug, Clone, Copy)]
pub struct ParameterDraw {
    pub bath: SqueezedBath,
    pub atom: AtomParams,
}

/// Seeded draw over the validation ranges: itinerant N in [0, 3], purity
/// ratio in [0, 1], Φ in [0, π), Ω in [0, 10]γ, η_c in [0.5, 1].
pub fn sample_parameter_sets(count: usize, seed: u64) -> Vec<ParameterDraw> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n_itinerant: f64 = rng.gen_range(0.0..3.0);
            let ratio: f64 = rng.gen_range(0.0..1.0);
            let phi: f64 = rng.gen_range(0.0..PI);
            let rabi: f64 = rng.gen_range(0.0..10.0);
            let eta_c: f64 = rng.gen_range(0.5..1.0);
            let m_itinerant = ratio * (n_itinerant * (n_itinerant + 1.0)).sqrt();
            let bath = SqueezedBath::new(eta_c * n_itinerant, eta_c * m_itinerant, phi)
                .expect("diluted moments stay physical");
            let atom = AtomParams::new(1.0, eta_c, rabi).expect("valid atom");
            ParameterDraw { bath, atom }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub sets: usize,
    /// max over sets of (L∞ analytic−numeric)/(L∞ numeric) on the grid.
    pub worst_spectrum_rel_linf: f64,
    /// max over sets of the Bloch-vector deviation of the long-time state.
    pub worst_steady_state: f64,
    /// max over sets of |ΣK_j + K − (1 + ⟨σz⟩)/2|.
    pub worst_sum_rule: f64,
    /// Sets where near-degenerate roots forced a drive nudge.
    pub perturbed_sets: usize,
    pub spectrum_tolerance: f64,
    pub failures: Vec<String>,
    pub elapsed: Duration,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for EquivalenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "equivalence run: {} parameter sets in {:.1?}", self.sets, self.elapsed)?;
        writeln!(
            f,
            "  spectrum   worst relative Linf = {:.3e} (tolerance {:.1e})",
            self.worst_spectrum_rel_linf, self.spectrum_tolerance
        )?;
        writeln!(f, "  steady     worst deviation     = {:.3e} (tolerance 1.0e-8)", self.worst_steady_state)?;
        writeln!(f, "  sum rule   worst deviation     = {:.3e} (tolerance 1.0e-10)", self.worst_sum_rule)?;
        writeln!(f, "  degeneracy-perturbed sets: {}", self.perturbed_sets)?;
        if self.failures.is_empty() {
            writeln!(f, "  PASS")?;
        } else {
            for failure in &self.failures {
                writeln!(f, "  FAIL {failure}")?;
            }
        }
        Ok(())
    }
}

/// Run the analytic-vs-oracle equivalence suite. `corrupt_hook` flips the
/// sign of the off-axis rate on the analytic side only (by mirroring the
/// squeezing phase), a deliberate fault used to prove the harness can fail.
pub fn equivalence_run(
    sets: usize,
    seed: u64,
    spectrum_tolerance: f64,
    corrupt_hook: bool,
) -> Result<EquivalenceReport, OracleError> {
    let started = Instant::now();
    let draws = sample_parameter_sets(sets, seed);
    let mut report = EquivalenceReport {
        sets,
        worst_spectrum_rel_linf: 0.0,
        worst_steady_state: 0.0,
        worst_sum_rule: 0.0,
        perturbed_sets: 0,
        spectrum_tolerance,
        failures: Vec::new(),
        elapsed: Duration::ZERO,
    };

    for (index, draw) in draws.iter().enumerate() {
        let analytic_bath = if corrupt_hook {
            SqueezedBath::new(draw.bath.n_photons(), draw.bath.m_mag(), -draw.bath.phi())
                .expect("mirrored phase stays physical")
        } else {
            draw.bath
        };

        let config = OracleConfig::for_params(&draw.bath, &draw.atom);
        let rho = steady_state_numeric(&draw.bath, &draw.atom, &config)?;
        let (x, y, z) = rho.bloch_vector();
        let closed = spectra::steady_state(&analytic_bath, &draw.atom)
            .map_err(|e| OracleError::InvalidConfig { reason: e.to_string() })?;
        let steady_dev = (x - closed.sx)
            .abs()
            .max((y - closed.sy).abs())
            .max((z - closed.sz).abs());
        report.worst_steady_state = report.worst_steady_state.max(steady_dev);
        if steady_dev > 1e-8 {
            report
                .failures
                .push(format!("set {index}: steady-state deviation {steady_dev:.3e}"));
        }

        let decomposition = spectra::decompose(&analytic_bath, &draw.atom)
            .map_err(|e| OracleError::InvalidConfig { reason: e.to_string() })?;
        if decomposition.perturbed {
            report.perturbed_sets += 1;
        }
        let sum_rule = (decomposition.sum_rule_total().re - closed.excited_population()).abs()
            + decomposition.sum_rule_total().im.abs();
        report.worst_sum_rule = report.worst_sum_rule.max(sum_rule);
        if sum_rule > 1e-10 {
            report
                .failures
                .push(format!("set {index}: sum rule deviation {sum_rule:.3e}"));
        }

        let rates = crate::model::rates_from_params(&draw.bath, &draw.atom.normalized());
        let span = 8.0 * draw.atom.rabi().max(rates.g_x);
        let grid = symmetric_grid(span.max(4.0), 161);
        let numeric = spectrum_numeric_with_state(&rho, &draw.bath, &draw.atom, &grid, &config)?;
        let scale = numeric
            .values()
            .iter()
            .fold(0.0f64, |m, &v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let linf = grid
            .iter()
            .zip(numeric.values())
            .map(|(&w, &num)| (decomposition.sample(w) - num).abs())
            .fold(0.0f64, f64::max)
            / scale;
        report.worst_spectrum_rel_linf = report.worst_spectrum_rel_linf.max(linf);
        if linf > spectrum_tolerance {
            report
                .failures
                .push(format!("set {index}: spectrum relative Linf {linf:.3e}"));
        }
    }

    report.elapsed = started.elapsed();
    Ok(report)
}

/// The undriven double-root corner: vacuum moments at the drive amplitude
/// where the sideband roots collide, exercising the perturbation path.
pub fn threshold_draw() -> ParameterDraw {
    ParameterDraw {
        bath: SqueezedBath::vacuum(),
        atom: AtomParams::new(1.0, 1.0, 0.25).expect("valid atom"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_seeded_and_in_range() {
        let a = sample_parameter_sets(20, 5);
        let b = sample_parameter_sets(20, 5);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.bath, y.bath);
        }
        for draw in &a {
            assert!(draw.bath.n_photons() >= 0.0 && draw.bath.n_photons() <= 3.0);
            assert!(draw.bath.m_mag() <= draw.bath.m_max() + 1e-12);
            assert!(draw.atom.rabi() <= 10.0);
            assert!(draw.atom.eta_c() >= 0.5 && draw.atom.eta_c() <= 1.0);
        }
        let c = sample_parameter_sets(20, 6);
        assert_ne!(a[0].bath, c[0].bath);
    }
}
