//! Roots of the cubic resolvent denominator
//!
//!   D(s) = (s + γ_N)[(s + γ−)(s + γ+) − γ_M²] + (s + γ+) Ω²,
//!
//! computed as eigenvalues of the companion matrix and polished with two
//! Newton steps. All quantities are in units of γ.

use nalgebra::Matrix3;
use num_complex::Complex64;

use crate::model::{unit_rates, AtomParams, RateSet, SqueezedBath};

/// Coefficients (a2, a1, a0) of the monic cubic s³ + a2 s² + a1 s + a0.
pub fn cubic_coefficients(rates: &RateSet, rabi: f64) -> [f64; 3] {
    let w2 = rabi * rabi;
    let nm2 = rates.g_nm * rates.g_nm;
    [
        2.0 * rates.g_n,
        nm2 + rates.g_n * rates.g_n + w2,
        rates.g_n * nm2 + w2 * rates.g_plus,
    ]
}

fn eval_cubic(s: Complex64, c: &[f64; 3]) -> Complex64 {
    ((s + c[0]) * s + c[1]) * s + c[2]
}

fn eval_cubic_derivative(s: Complex64, c: &[f64; 3]) -> Complex64 {
    (3.0 * s + 2.0 * c[0]) * s + c[1]
}

fn newton_polish(mut s: Complex64, c: &[f64; 3]) -> Complex64 {
    for _ in 0..2 {
        let d = eval_cubic_derivative(s, c);
        if d.norm() < 1e-300 {
            break;
        }
        s -= eval_cubic(s, c) / d;
    }
    s
}

/// Roots of a monic real cubic, ordered by ascending |Im|, ties broken by
/// ascending Re then Im. The returned multiset is exactly closed under
/// conjugation: the real Schur form either yields real eigenvalues or an
/// exact conjugate pair, and polishing preserves that structure.
pub fn solve_monic_cubic(coefficients: &[f64; 3]) -> [Complex64; 3] {
    let &[a2, a1, a0] = coefficients;
    let companion = Matrix3::new(
        0.0, 0.0, -a0, //
        1.0, 0.0, -a1, //
        0.0, 1.0, -a2,
    );
    let eigen = companion.complex_eigenvalues();
    let mut roots: Vec<Complex64> = eigen.iter().map(|&z| Complex64::new(z.re, z.im)).collect();

    let complex_count = roots.iter().filter(|z| z.im != 0.0).count();
    if complex_count == 2 {
        let real = *roots.iter().find(|z| z.im == 0.0).expect("one real root");
        let pair = *roots.iter().find(|z| z.im > 0.0).expect("upper half root");
        let real = {
            let p = newton_polish(real, coefficients);
            Complex64::new(p.re, 0.0)
        };
        let pair = newton_polish(pair, coefficients);
        roots = vec![real, pair, pair.conj()];
    } else {
        for r in roots.iter_mut() {
            let p = newton_polish(Complex64::new(r.re, 0.0), coefficients);
            *r = Complex64::new(p.re, 0.0);
        }
    }

    roots.sort_by(|a, b| {
        a.im.abs()
            .total_cmp(&b.im.abs())
            .then(a.re.total_cmp(&b.re))
            .then(a.im.total_cmp(&b.im))
    });
    [roots[0], roots[1], roots[2]]
}

/// Roots of D(s) for the given parameters, in units of γ.
pub fn cubic_roots(bath: &SqueezedBath, atom: &AtomParams) -> [Complex64; 3] {
    let rates = unit_rates(bath);
    solve_monic_cubic(&cubic_coefficients(&rates, atom.rabi()))
}

/// Closed-form roots in the aligned limit γ_M = 0 (2Φ ∈ {0, π}):
///
///   λ0 = −γ+,  λ1,2 = −(γ− + γ_N)/2 ± ½ sqrt((γ− − γ_N)² − 4Ω²),
///
/// returned with the same ordering convention as [`cubic_roots`].
pub fn closed_form_roots_aligned(rates: &RateSet, rabi: f64) -> [Complex64; 3] {
    let disc = Complex64::new(
        (rates.g_minus - rates.g_n) * (rates.g_minus - rates.g_n) - 4.0 * rabi * rabi,
        0.0,
    );
    let half_sqrt = 0.5 * disc.sqrt();
    let mid = -0.5 * (rates.g_minus + rates.g_n);
    let mut roots = [
        Complex64::new(-rates.g_plus, 0.0),
        mid + half_sqrt,
        mid - half_sqrt,
    ];
    roots.sort_by(|a, b| {
        a.im.abs()
            .total_cmp(&b.im.abs())
            .then(a.re.total_cmp(&b.re))
            .then(a.im.total_cmp(&b.im))
    });
    roots
}

/// Smallest pairwise distance within a root triple.
pub(crate) fn min_separation(roots: &[Complex64; 3]) -> f64 {
    let d01 = (roots[0] - roots[1]).norm();
    let d02 = (roots[0] - roots[2]).norm();
    let d12 = (roots[1] - roots[2]).norm();
    d01.min(d02).min(d12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::unit_rates;
    use approx::assert_abs_diff_eq;

    fn atom(rabi: f64) -> AtomParams {
        AtomParams::new(1.0, 1.0, rabi).unwrap()
    }

    fn max_residual(roots: &[Complex64; 3], c: &[f64; 3]) -> f64 {
        roots.iter().map(|&r| eval_cubic(r, c).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn vacuum_undriven_roots() {
        let roots = cubic_roots(&SqueezedBath::vacuum(), &atom(0.0));
        // Double root at -1/2 and a simple root at -1.
        let mut res: Vec<f64> = roots.iter().map(|z| z.re).collect();
        res.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(res[0], -1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(res[1], -0.5, epsilon = 1e-7);
        assert_abs_diff_eq!(res[2], -0.5, epsilon = 1e-7);
        assert!(roots.iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn generic_roots_annihilate_cubic() {
        let bath = SqueezedBath::new(1.0, 1.2, 1.0).unwrap();
        let a = atom(3.0);
        let rates = unit_rates(&bath);
        let c = cubic_coefficients(&rates, a.rabi());
        let roots = cubic_roots(&bath, &a);
        let scale = c.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        assert!(max_residual(&roots, &c) < 1e-9 * scale);
        // Stable and conjugation-closed.
        assert!(roots.iter().all(|z| z.re < 0.0));
        let sum_im: f64 = roots.iter().map(|z| z.im).sum();
        assert_abs_diff_eq!(sum_im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn aligned_limit_matches_general_solver() {
        for (phi, rabi) in [(0.0, 0.7), (std::f64::consts::FRAC_PI_2, 2.5), (0.0, 5.0)] {
            let bath = SqueezedBath::new(0.6, 0.55, phi).unwrap();
            let a = atom(rabi);
            let rates = unit_rates(&bath);
            let general = cubic_roots(&bath, &a);
            let closed = closed_form_roots_aligned(&rates, rabi);
            for (g, c) in general.iter().zip(closed.iter()) {
                assert!((g - c).norm() < 1e-10, "phi={phi} rabi={rabi}: {g} vs {c}");
            }
        }
    }

    #[test]
    fn root_sum_equals_negative_trace() {
        let bath = SqueezedBath::new(2.0, 1.5, 1.1).unwrap();
        let a = atom(4.0);
        let roots = cubic_roots(&bath, &a);
        let sum: Complex64 = roots.iter().sum();
        let rates = unit_rates(&bath);
        assert_abs_diff_eq!(sum.re, -2.0 * rates.g_n, epsilon = 1e-10);
        assert_abs_diff_eq!(sum.im, 0.0, epsilon = 1e-12);
    }
}
