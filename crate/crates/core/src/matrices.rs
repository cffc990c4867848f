//! Quadratic forms from the energy dissipation identity
//!
//! ```text
//! dE/dt + ∫(w - w*)(w^σ - w*^σ) = -∫ X A Xᵀ - ∫ Y B Yᵀ
//! ```
//!
//! with `X = (u - u*, v - v*)` and `Y = (∇u/u, ∇v/v, ∇w/w)`. Decay of the
//! energy needs both matrices positive definite.

use crate::params::ModelParams;
use crate::steady::SteadyState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMatrix<const N: usize> {
    pub m: [[f64; N]; N],
}

impl<const N: usize> SymMatrix<N> {
    /// Builds from the upper triangle; the lower triangle is mirrored.
    pub fn from_upper(m: [[f64; N]; N]) -> Self {
        let mut s = m;
        for i in 0..N {
            for j in 0..i {
                s[i][j] = m[j][i];
            }
        }
        SymMatrix { m: s }
    }

    pub fn is_symmetric(&self) -> bool {
        (0..N).all(|i| (0..N).all(|j| self.m[i][j] == self.m[j][i]))
    }

    /// Determinant of the top-left `k × k` block, by Gaussian elimination
    /// with partial pivoting.
    pub fn leading_minor(&self, k: usize) -> f64 {
        assert!(k >= 1 && k <= N);
        let mut a = self.m;
        let mut det = 1.0;
        for col in 0..k {
            let pivot = (col..k)
                .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
                .unwrap_or(col);
            if a[pivot][col] == 0.0 {
                return 0.0;
            }
            if pivot != col {
                a.swap(pivot, col);
                det = -det;
            }
            det *= a[col][col];
            for row in col + 1..k {
                let factor = a[row][col] / a[col][col];
                for c in col..k {
                    a[row][c] -= factor * a[col][c];
                }
            }
        }
        det
    }

    pub fn determinant(&self) -> f64 {
        self.leading_minor(N)
    }

    /// Sylvester's criterion: every leading principal minor is positive.
    pub fn is_positive_definite(&self) -> bool {
        (1..=N).all(|k| self.leading_minor(k) > 0.0)
    }
}

/// Coefficient matrix of `(u - u*, v - v*)` in the dissipation identity.
pub fn matrix_a(params: &ModelParams) -> SymMatrix<2> {
    let ModelParams { b1, b2, b3, .. } = *params;
    let off = (b1 * b2 - b3) / (2.0 * b2 * b3);
    SymMatrix::from_upper([[1.0 / b3, off], [0.0, 1.0 / b2]])
}

/// `det A = (4 b2 b3 - (b1 b2 - b3)^2) / (4 b2^2 b3^2)`.
pub fn det_a_closed_form(params: &ModelParams) -> f64 {
    let ModelParams { b1, b2, b3, .. } = *params;
    let cross = b1 * b2 - b3;
    (4.0 * b2 * b3 - cross * cross) / (4.0 * b2 * b2 * b3 * b3)
}

/// Coefficient matrix of the logarithmic gradients, evaluated at the point
/// values `u_val`, `v_val`.
pub fn matrix_b(params: &ModelParams, u_val: f64, v_val: f64, steady: &SteadyState) -> SymMatrix<3> {
    let ModelParams {
        d1,
        d2,
        xi,
        chi,
        b2,
        b3,
        ..
    } = *params;
    let SteadyState {
        u_star, v_star, w_star, ..
    } = *steady;
    let taxis_uv = -xi * v_star * u_val / (2.0 * b2);
    let alarm = -chi * w_star * u_val * v_val / 2.0;
    SymMatrix::from_upper([
        [d1 * u_star / b3, taxis_uv, alarm],
        [0.0, d2 * v_star / b2, alarm],
        [0.0, 0.0, w_star],
    ])
}

/// Second leading minor of `B`, expanded:
/// `v* (4 d1 d2 b2 u* - b3 ξ² v* u²) / (4 b2² b3)`.
pub fn b_second_minor_closed_form(params: &ModelParams, u_val: f64, steady: &SteadyState) -> f64 {
    let ModelParams { d1, d2, xi, b2, b3, .. } = *params;
    let SteadyState { u_star, v_star, .. } = *steady;
    v_star * (4.0 * d1 * d2 * b2 * u_star - xi * xi * v_star * u_val * u_val * b3) / (4.0 * b2 * b2 * b3)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaxisCoefficient {
    Xi,
    Chi,
}

/// Largest value of one taxis coefficient (the other held at its current
/// value) for which `B(u_max, v_max)` stays positive definite. `None` if `B`
/// is not positive definite even with that coefficient set to zero;
/// infinite if it never fails.
pub fn b_threshold(
    params: &ModelParams,
    steady: &SteadyState,
    u_max: f64,
    v_max: f64,
    which: TaxisCoefficient,
) -> Option<f64> {
    let pd = |c: f64| {
        let mut p = *params;
        match which {
            TaxisCoefficient::Xi => p.xi = c,
            TaxisCoefficient::Chi => p.chi = c,
        }
        matrix_b(&p, u_max, v_max, steady).is_positive_definite()
    };
    if !pd(0.0) {
        return None;
    }
    let mut hi = 1.0;
    while pd(hi) {
        hi *= 2.0;
        if hi > 1e12 {
            return Some(f64::INFINITY);
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pd(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steady::solve_steady_state;

    fn example() -> ModelParams {
        ModelParams::coexistence_example(0.05, 0.05)
    }

    #[test]
    fn det_a_for_example_coefficients() {
        let a = matrix_a(&example());
        // (4·0.04 - 0.01) / (4·0.16·0.01)
        let expected: f64 = 0.15 / 0.0064;
        assert!((expected - 23.4375).abs() < 1e-12);
        assert!((a.determinant() - expected).abs() < 1e-10);
        assert!((det_a_closed_form(&example()) - expected).abs() < 1e-10);
        assert!(a.is_positive_definite());
        assert!(a.is_symmetric());
    }

    #[test]
    fn a_indefinite_when_stability_fails() {
        let p = ModelParams {
            b1: 1.0,
            b2: 1.0,
            b3: 0.01,
            ..example()
        };
        let a = matrix_a(&p);
        assert!(a.determinant() < 0.0);
        assert!(!a.is_positive_definite());
    }

    #[test]
    fn b_without_taxis_is_diagonal() {
        let p = ModelParams::coexistence_example(0.0, 0.0);
        let ss = solve_steady_state(&p, 1e-12).unwrap();
        let b = matrix_b(&p, 1.3, 0.9, &ss);
        assert_eq!(b.m[0][1], 0.0);
        assert_eq!(b.m[0][2], 0.0);
        assert_eq!(b.m[1][2], 0.0);
        assert_eq!(b.m[0][0], ss.u_star / 0.1);
        assert_eq!(b.m[1][1], ss.v_star / 0.4);
        assert_eq!(b.m[2][2], ss.w_star);
        assert!(b.is_positive_definite());

        let p = ModelParams::coexistence_example(5.0, 5.0);
        let b = matrix_b(&p, 0.0, 0.9, &ss);
        assert!(b.m[0][1] == 0.0 && b.m[0][2] == 0.0 && b.m[1][2] == 0.0);
        assert!(b.is_positive_definite());
    }

    #[test]
    fn b_second_minor_closed_form_matches() {
        let p = example();
        let ss = solve_steady_state(&p, 1e-12).unwrap();
        for u in [0.3, 1.0, 1.7] {
            let b = matrix_b(&p, u, 1.2, &ss);
            let direct = b.m[0][0] * b.m[1][1] - b.m[0][1] * b.m[0][1];
            assert!((b.leading_minor(2) - direct).abs() < 1e-12);
            assert!((b_second_minor_closed_form(&p, u, &ss) - direct).abs() < 1e-12);
        }
        assert!(matrix_b(&p, 1.0, 1.0, &ss).is_positive_definite());
    }

    #[test]
    fn threshold_brackets_definiteness() {
        let p = example();
        let ss = solve_steady_state(&p, 1e-12).unwrap();
        for which in [TaxisCoefficient::Xi, TaxisCoefficient::Chi] {
            let t = b_threshold(&p, &ss, 1.0, 1.0, which).unwrap();
            assert!(t.is_finite() && t > 0.0);
            let mut below = p;
            let mut above = p;
            match which {
                TaxisCoefficient::Xi => {
                    below.xi = 0.999 * t;
                    above.xi = 1.001 * t;
                }
                TaxisCoefficient::Chi => {
                    below.chi = 0.999 * t;
                    above.chi = 1.001 * t;
                }
            }
            assert!(matrix_b(&below, 1.0, 1.0, &ss).is_positive_definite());
            assert!(!matrix_b(&above, 1.0, 1.0, &ss).is_positive_definite());
        }
        assert_eq!(
            b_threshold(&p, &ss, 0.0, 1.0, TaxisCoefficient::Xi),
            Some(f64::INFINITY)
        );
    }
}
