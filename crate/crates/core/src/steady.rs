//! Spatially homogeneous coexistence state.
//!
//! With unit growth rates the constant positive equilibrium solves
//!
//! ```text
//!  u + b1 v + b3 w = 1
//! -u +    v + b2 w = 1
//!  w^σ - u - v     = 1
//! ```
//!
//! Eliminating `u` and `v` leaves the scalar equation
//! `J(w) = (b1 + 1) w^σ + (b2 + 2 b3 - b1 b2) w - 4 = 0` with `J(0) = -4`.
//! Under the coexistence hypothesis both coefficients are non-negative, so
//! `J` is increasing on `(0, ∞)` and its root lies below 4.

use crate::error::{Error, Result};
use crate::params::{validate_hypothesis, ModelParams};
use crate::state::Species;

pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub u_star: f64,
    pub v_star: f64,
    pub w_star: f64,
    /// False when the parameters violate the coexistence hypothesis; the
    /// triple is still a positive root, but uniqueness and stability are not
    /// backed by the theory.
    pub verified: bool,
}

impl SteadyState {
    pub fn as_array(&self) -> [f64; 3] {
        [self.u_star, self.v_star, self.w_star]
    }

    pub fn level(&self, species: Species) -> f64 {
        self.as_array()[species.index()]
    }
}

/// `J(w)` from the reduced steady-state equation.
pub fn steady_j(params: &ModelParams, w: f64) -> f64 {
    let ModelParams { b1, b2, b3, sigma, .. } = *params;
    (b1 + 1.0) * libm::pow(w, sigma) + (b2 + 2.0 * b3 - b1 * b2) * w - 4.0
}

/// Residual of the three steady-state equations at `(u, v, w)`.
pub fn steady_state_residual(params: &ModelParams, candidate: [f64; 3]) -> [f64; 3] {
    let [u, v, w] = candidate;
    let ModelParams { b1, b2, b3, sigma, .. } = *params;
    [
        u + b1 * v + b3 * w - 1.0,
        -u + v + b2 * w - 1.0,
        libm::pow(w, sigma) - u - v - 1.0,
    ]
}

/// Knobs of the bracketed root search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Initial upper end of the bracket `[0, upper]`.
    pub initial_upper: f64,
    /// How many times `upper` may be doubled while `J(upper) <= 0`.
    pub max_expansions: u32,
    /// Required bound on `|J(w*)|`.
    pub tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            initial_upper: 4.0,
            max_expansions: 64,
            tol: DEFAULT_TOL,
        }
    }
}

/// Outcome of the root search, kept for reporting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadySolution {
    pub state: SteadyState,
    /// Final bracket `[0, upper]` that was bisected.
    pub upper: f64,
    pub j_at_zero: f64,
    pub j_at_upper: f64,
    pub j_at_root: f64,
    pub iterations: u32,
}

/// Solves for the coexistence steady state with the default bracket and the
/// given tolerance on `|J(w*)|`.
pub fn solve_steady_state(params: &ModelParams, tol: f64) -> Result<SteadyState> {
    let options = SolverOptions {
        tol,
        ..SolverOptions::default()
    };
    solve_steady_state_with(params, &options).map(|s| s.state)
}

pub fn solve_steady_state_with(params: &ModelParams, options: &SolverOptions) -> Result<SteadySolution> {
    if !params.has_unit_growth_rates() {
        return Err(Error::NonUnitGrowthRates);
    }
    if !(options.tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            value: options.tol,
            reason: "tolerance must be positive",
        });
    }
    if !(options.initial_upper > 0.0) || !options.initial_upper.is_finite() {
        return Err(Error::InvalidParameter {
            name: "initial_upper",
            value: options.initial_upper,
            reason: "bracket end must be finite and positive",
        });
    }

    let j = |w: f64| steady_j(params, w);
    let j_at_zero = j(0.0);

    let mut upper = options.initial_upper;
    let mut j_upper = j(upper);
    let mut expansions = 0;
    while j_upper <= 0.0 {
        if expansions == options.max_expansions || !upper.is_finite() {
            return Err(Error::BracketFailure { expansions, upper });
        }
        upper *= 2.0;
        j_upper = j(upper);
        expansions += 1;
    }

    // J(0) < 0 < J(upper); keep that sign pattern while halving.
    let (mut lo, mut hi) = (0.0_f64, upper);
    let mut iterations = 0;
    let mut w = 0.5 * (lo + hi);
    let mut jw = j(w);
    while (jw).abs() >= options.tol {
        if jw < 0.0 {
            lo = w;
        } else {
            hi = w;
        }
        let mid = 0.5 * (lo + hi);
        iterations += 1;
        if mid <= lo || mid >= hi {
            return Err(Error::ToleranceNotReached {
                residual: (jw).abs(),
                tol: options.tol,
            });
        }
        w = mid;
        jw = j(w);
    }

    let ModelParams { b1, b2, b3, .. } = *params;
    let u = ((1.0 - b1) - (b3 - b1 * b2) * w) / (b1 + 1.0);
    let v = (2.0 - (b2 + b3) * w) / (b1 + 1.0);

    for (species, value) in [(Species::Prey, u), (Species::Predator, v), (Species::Secondary, w)] {
        if !(value > 0.0) {
            return Err(Error::NonPositiveSteadyState { species, value });
        }
    }

    Ok(SteadySolution {
        state: SteadyState {
            u_star: u,
            v_star: v,
            w_star: w,
            verified: validate_hypothesis(params).coexistence_holds(),
        },
        upper,
        j_at_zero,
        j_at_upper: j_upper,
        j_at_root: jw,
        iterations,
    })
}
