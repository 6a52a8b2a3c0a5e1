//! Damped least squares (Levenberg–Marquardt) over an unconstrained internal
//! parameter space, with forward-difference Jacobians. Bounded physical
//! parameters reach the optimizer through smooth squashing maps.

use nalgebra::{DMatrix, DVector};

use super::FitError;

/// Smooth map from an unconstrained internal coordinate to a physical one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamMap {
    Free,
    /// Softplus: p = ln(1 + e^u) > 0.
    Positive,
    /// Sine squash: p = (sin u + 1)/2 ∈ [0, 1].
    UnitInterval,
}

impl ParamMap {
    pub fn forward(&self, u: f64) -> f64 {
        match self {
            ParamMap::Free => u,
            ParamMap::Positive => {
                if u > 30.0 {
                    u
                } else {
                    u.exp().ln_1p()
                }
            }
            ParamMap::UnitInterval => 0.5 * (u.sin() + 1.0),
        }
    }

    pub fn inverse(&self, p: f64) -> f64 {
        match self {
            ParamMap::Free => p,
            ParamMap::Positive => {
                let p = p.max(1e-300);
                if p > 30.0 {
                    p
                } else {
                    // ln(e^p − 1) = p + ln(1 − e^{−p})
                    p + (-(-p).exp()).ln_1p()
                }
            }
            ParamMap::UnitInterval => (2.0 * p.clamp(0.0, 1.0) - 1.0).asin(),
        }
    }

    pub fn derivative(&self, u: f64) -> f64 {
        match self {
            ParamMap::Free => 1.0,
            ParamMap::Positive => 1.0 / (1.0 + (-u).exp()),
            ParamMap::UnitInterval => 0.5 * u.cos(),
        }
    }

    /// Whether the physical parameter sits hard against a boundary.
    pub fn pinned(&self, u: f64) -> bool {
        match self {
            ParamMap::Free => false,
            ParamMap::Positive => u < -13.0,
            ParamMap::UnitInterval => u.cos().abs() < 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative forward-difference step for the Jacobian.
    pub rel_step: f64,
    /// Convergence when the relative residual decrease drops below this.
    pub ftol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            rel_step: 1e-6,
            ftol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    /// Internal (unconstrained) parameters at the optimum.
    pub params: Vec<f64>,
    /// ||r||₂ at the optimum.
    pub residual_norm: f64,
    /// Covariance of the internal parameters, s² (JᵀJ)⁻¹ with
    /// s² = ||r||²/(m − n).
    pub covariance: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Residual evaluator; `None` marks an infeasible parameter point, which the
/// optimizer treats as a rejected step.
pub type ResidualFn<'a> = dyn Fn(&[f64]) -> Option<Vec<f64>> + 'a;

fn jacobian(f: &ResidualFn, u: &[f64], r0: &[f64], rel_step: f64) -> Option<DMatrix<f64>> {
    let m = r0.len();
    let n = u.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut probe = u.to_vec();
    for j in 0..n {
        let h = rel_step * probe[j].abs().max(1.0);
        let saved = probe[j];
        probe[j] = saved + h;
        let r = f(&probe)?;
        probe[j] = saved;
        for i in 0..m {
            jac[(i, j)] = (r[i] - r0[i]) / h;
        }
    }
    Some(jac)
}

/// Minimize ||f(u)||² starting from `u0`. The damping factor scales the
/// diagonal of JᵀJ and adapts by one order of magnitude per accept/reject.
pub fn minimize(f: &ResidualFn, u0: &[f64], options: &LmOptions) -> Result<LmOutcome, FitError> {
    let n = u0.len();
    let mut u = u0.to_vec();
    let mut residuals = f(&u).ok_or(FitError::InfeasibleStart)?;
    let m = residuals.len();
    if m < n {
        return Err(FitError::Underdetermined {
            points: m,
            parameters: n,
        });
    }
    let mut cost: f64 = residuals.iter().map(|r| r * r).sum();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..options.max_iterations {
        iterations += 1;
        let jac = match jacobian(f, &u, &residuals, options.rel_step) {
            Some(j) => j,
            None => break,
        };
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * DVector::from_column_slice(&residuals);

        let mut accepted = false;
        for _ in 0..30 {
            let mut damped = jtj.clone();
            for k in 0..n {
                let d = jtj[(k, k)];
                damped[(k, k)] = d + lambda * d.max(1e-12);
            }
            let step = match damped.cholesky() {
                Some(ch) => ch.solve(&(-&jtr)),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(a, d)| a + d).collect();
            let trial_res = match f(&trial) {
                Some(r) => r,
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let trial_cost: f64 = trial_res.iter().map(|r| r * r).sum();
            if trial_cost.is_finite() && trial_cost <= cost {
                let decrease = (cost - trial_cost) / cost.max(f64::MIN_POSITIVE);
                u = trial;
                residuals = trial_res;
                cost = trial_cost;
                lambda = (lambda * 0.3).max(1e-14);
                accepted = true;
                if decrease < options.ftol || cost == 0.0 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e14 {
                break;
            }
        }
        if !accepted {
            // No downhill step found at any damping: we are at a (possibly
            // flat) local optimum.
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }

    // Covariance from the Gauss-Newton normal matrix at the optimum.
    let jac = jacobian(f, &u, &residuals, options.rel_step);
    let covariance = match jac {
        Some(j) => {
            let jtj = j.transpose() * &j;
            let dof = (m - n).max(1) as f64;
            let s2 = cost / dof;
            invert_psd(&jtj).map(|inv| inv * s2).unwrap_or_else(|| DMatrix::zeros(n, n))
        }
        None => DMatrix::zeros(n, n),
    };

    Ok(LmOutcome {
        params: u,
        residual_norm: cost.sqrt(),
        covariance,
        iterations,
        converged,
    })
}

/// Invert a symmetric positive (semi)definite matrix, ridging it slightly if
/// the Cholesky factorization stalls on a flat direction.
fn invert_psd(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if let Some(ch) = a.clone().cholesky() {
        return Some(ch.inverse());
    }
    let scale = a.diagonal().amax().max(1e-300);
    for ridge in [1e-12, 1e-9, 1e-6] {
        let mut b = a.clone();
        for k in 0..a.nrows() {
            b[(k, k)] += ridge * scale;
        }
        if let Some(ch) = b.cholesky() {
            return Some(ch.inverse());
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn param_maps_round_trip() {
        for map in [ParamMap::Free, ParamMap::Positive, ParamMap::UnitInterval] {
            for p in [0.02, 0.3, 0.55, 0.97] {
                let u = map.inverse(p);
                assert_relative_eq!(map.forward(u), p, epsilon = 1e-12);
                let h = 1e-7;
                let numeric = (map.forward(u + h) - map.forward(u - h)) / (2.0 * h);
                assert_relative_eq!(map.derivative(u), numeric, epsilon = 1e-6);
                assert!(!map.pinned(u), "interior point flagged as pinned");
            }
        }
        assert!(ParamMap::Positive.pinned(ParamMap::Positive.inverse(1e-9)));
        assert!(ParamMap::UnitInterval.pinned(ParamMap::UnitInterval.inverse(1.0 - 1e-9)));
    }

    #[test]
    fn recovers_exponential_parameters() {
        // y = a e^{-b x} sampled exactly; the optimizer must find (a, b).
        let xs: Vec<f64> = (0..40).map(|k| k as f64 * 0.25).collect();
        let truth = (2.5, 0.7);
        let data: Vec<f64> = xs.iter().map(|x| truth.0 * (-truth.1 * x).exp()).collect();
        let f = |p: &[f64]| -> Option<Vec<f64>> {
            Some(
                xs.iter()
                    .zip(&data)
                    .map(|(x, y)| p[0] * (-p[1] * x).exp() - y)
                    .collect(),
            )
        };
        let out = minimize(&f, &[1.0, 0.2], &LmOptions::default()).unwrap();
        assert!(out.converged);
        assert_relative_eq!(out.params[0], truth.0, epsilon = 1e-8);
        assert_relative_eq!(out.params[1], truth.1, epsilon = 1e-8);
        assert!(out.residual_norm < 1e-10);
    }

    #[test]
    fn underdetermined_is_rejected() {
        let f = |_: &[f64]| Some(vec![0.0]);
        let err = minimize(&f, &[1.0, 2.0], &LmOptions::default()).unwrap_err();
        assert!(matches!(err, FitError::Underdetermined { .. }));
    }
}
