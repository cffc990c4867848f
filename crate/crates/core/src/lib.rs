//! Numerical core for the three-species alarm-taxis predator-prey system
//!
//! ```text
//! u_t = d1 Δu + r1 u(1-u) - b1 uv - b3 uw
//! v_t = d2 Δv - ∇·(ξ v ∇u) + r2 v(1-v) + uv - b2 vw
//! w_t =    Δw - ∇·(χ w ∇(uv)) + r3 w(1-w^σ) + vw + uw
//! ```
//!
//! on an interval or rectangle with homogeneous Neumann boundaries.
//!
//! The crate is `no_std` (it needs `alloc`) and holds everything that is pure
//! computation: parameter checks and the coexistence steady state, the
//! cell-centred finite-volume operators, the positivity-preserving explicit
//! integrator, and the diagnostics (norms, Lyapunov energy, quadratic-form
//! matrices, exponential decay fits). File formats and the command line live
//! in the `alarmtaxis` crate.
#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod initial;
pub mod integrator;
pub mod matrices;
pub mod ops;
pub mod params;
pub mod rhs;
pub mod state;
pub mod steady;

pub use diagnostics::{fit_decay, lyapunov_energy, record, DecayFit, DiagnosticsRecord, Window};
pub use error::{Error, Result};
pub use grid::{FaceField, Grid};
pub use initial::InitialCondition;
pub use integrator::{run, run_detailed, stable_dt, step, DtLimits, Method, Observer, RunOutcome, StepConfig, Stepper};
pub use matrices::{matrix_a, matrix_b, SymMatrix};
pub use params::{validate_hypothesis, HypothesisReport, ModelParams};
pub use rhs::{reaction_terms, rhs};
pub use state::{Reference, Species, StateField};
pub use steady::{solve_steady_state, steady_state_residual, SteadyState};
