//! Explicit time stepping with a positivity-preserving step-size limit.
//!
//! An explicit Euler step of the upwind scheme is a convex combination of
//! neighbouring cell values as long as
//!
//! ```text
//! dt · (1/dt_diff + 1/dt_adv + 1/dt_react) <= 1
//! ```
//!
//! so [`stable_dt`] combines the three limits harmonically and scales by the
//! CFL safety factor. SSP-RK2 (Heun) is an average of two Euler steps, and the
//! adaptive driver re-checks the limit on the intermediate stage.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::params::ModelParams;
use crate::rhs::{Bounds, RhsEvaluator};
use crate::state::{Reference, Species, StateField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    ExplicitEuler,
    #[default]
    Rk2Ssp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepConfig {
    /// Fraction of the positivity limit actually used, in `(0, 1]`.
    pub cfl_safety: f64,
    pub dt_max: f64,
    pub t_end: f64,
    pub method: Method,
    /// The observer sees every `observe_every`-th accepted step, the initial
    /// state, each checkpoint and the final state.
    pub observe_every: usize,
    /// Guard against runaway step counts.
    pub max_steps: usize,
    /// Times the integrator lands on exactly (snapshot times).
    pub checkpoints: Vec<f64>,
}

impl StepConfig {
    pub fn new(t_end: f64) -> Self {
        StepConfig {
            cfl_safety: 0.9,
            dt_max: 0.05,
            t_end,
            method: Method::Rk2Ssp,
            observe_every: 10,
            max_steps: 100_000_000,
            checkpoints: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, value, reason| Err(Error::InvalidParameter { name, value, reason });
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad("cfl_safety", self.cfl_safety, "must lie in (0, 1]");
        }
        if !(self.dt_max > 0.0) {
            return bad("dt_max", self.dt_max, "must be positive");
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return bad("t_end", self.t_end, "must be finite and non-negative");
        }
        if self.observe_every == 0 {
            return bad("observe_every", 0.0, "must be at least 1");
        }
        for &t in &self.checkpoints {
            if !(t >= 0.0 && t <= self.t_end) {
                return bad("checkpoints", t, "must lie within [0, t_end]");
            }
        }
        Ok(())
    }
}

/// The three ingredients of the step-size limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtLimits {
    /// `1 / (max(d1, d2, 1) · Σ_axes 2/h²)`, i.e. `h² / (2·dim·D)` on square cells.
    pub diffusive: f64,
    /// `1 / Σ_axes (2 s_axis / h_axis)` with `s` the largest face speed
    /// `max(ξ|∇u|, χ|∇(uv)|)`; infinite when every gradient vanishes.
    pub advective: f64,
    /// Inverse of a row-sum bound on the reaction Jacobian at the current
    /// maximal densities.
    pub reaction: f64,
}

impl DtLimits {
    pub fn compute(state: &StateField, params: &ModelParams, grid: &Grid) -> Self {
        let levels = state.reference().levels();
        let [du, dv, _] = state.deviations();
        let mut face_speed = [0.0_f64; 2];
        let mut face = |axis: usize, a: usize, b: usize, inv_h: f64| {
            let grad_u = (du[b] - du[a]) * inv_h;
            let uv = |c: usize| levels[0] * dv[c] + levels[1] * du[c] + du[c] * dv[c];
            let grad_uv = (uv(b) - uv(a)) * inv_h;
            let s = (params.xi * grad_u).abs().max((params.chi * grad_uv).abs());
            face_speed[axis] = face_speed[axis].max(s);
        };
        grid.for_each_x_face(|_, a, b, inv_h| face(0, a, b, inv_h));
        grid.for_each_y_face(|_, a, b, inv_h| face(1, a, b, inv_h));
        let bounds = Bounds {
            max_density: Species::ALL.map(|s| state.max_density(s)),
            face_speed,
        };
        Self::from_bounds(&bounds, params, grid)
    }

    pub(crate) fn from_bounds(bounds: &Bounds, params: &ModelParams, grid: &Grid) -> Self {
        let h = grid.h();
        let dim = grid.dim();
        let diffusivity = params.d1.max(params.d2).max(1.0);
        let inv_h2: f64 = (0..dim).map(|a| 2.0 / (h[a] * h[a])).sum();
        let diffusive = 1.0 / (diffusivity * inv_h2);

        let rate: f64 = (0..dim).map(|a| 2.0 * bounds.face_speed[a] / h[a]).sum();
        let advective = if rate > 0.0 { 1.0 / rate } else { f64::INFINITY };

        let [u, v, w] = bounds.max_density.map(|m| m.max(0.0));
        let p = params;
        let rows = [
            p.r1 * (1.0 + 2.0 * u) + p.b1 * v + p.b3 * w + (p.b1 + p.b3) * u,
            p.r2 * (1.0 + 2.0 * v) + u + p.b2 * w + (1.0 + p.b2) * v,
            p.r3 * (1.0 + (p.sigma + 1.0) * libm::pow(w, p.sigma)) + u + v + 2.0 * w,
        ];
        let lipschitz = rows.iter().fold(0.0_f64, |m, r| m.max(*r));
        let reaction = if lipschitz > 0.0 {
            1.0 / lipschitz
        } else {
            f64::INFINITY
        };

        DtLimits {
            diffusive,
            advective,
            reaction,
        }
    }

    /// `min(dt_max, cfl / (1/dt_diff + 1/dt_adv + 1/dt_react))`.
    pub fn combined(&self, cfl_safety: f64, dt_max: f64) -> f64 {
        let rate = 1.0 / self.diffusive + 1.0 / self.advective + 1.0 / self.reaction;
        (cfl_safety / rate).min(dt_max)
    }
}

/// Largest step that keeps the explicit update positive, scaled by the CFL
/// safety factor and capped at `dt_max`.
pub fn stable_dt(state: &StateField, params: &ModelParams, grid: &Grid, cfg: &StepConfig) -> f64 {
    DtLimits::compute(state, params, grid).combined(cfg.cfl_safety, cfg.dt_max)
}

/// Sink for intermediate states during [`run`].
pub trait Observer {
    fn observe(&mut self, state: &StateField);
}

impl<F: FnMut(&StateField)> Observer for F {
    fn observe(&mut self, state: &StateField) {
        self(state)
    }
}

/// Integrator with preallocated scratch buffers.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: Grid,
    params: ModelParams,
    reference: Reference,
    method: Method,
    evaluator: RhsEvaluator,
    k1: [Vec<f64>; 3],
    k2: [Vec<f64>; 3],
    stage: StateField,
}

impl Stepper {
    pub fn new(params: &ModelParams, grid: &Grid, reference: &Reference, method: Method) -> Result<Self> {
        let zeros = || [grid.zeros(), grid.zeros(), grid.zeros()];
        Ok(Stepper {
            grid: *grid,
            params: *params,
            reference: *reference,
            method,
            evaluator: RhsEvaluator::new(params, grid, reference)?,
            k1: zeros(),
            k2: zeros(),
            stage: StateField::from_deviations(grid, *reference, zeros())?,
        })
    }

    fn check_compatible(&self, state: &StateField) -> Result<()> {
        if *state.reference() != self.reference {
            return Err(Error::ReferenceMismatch);
        }
        for d in state.deviations() {
            self.grid.check_cells(d)?;
        }
        Ok(())
    }

    /// One step of size `dt`, in place. Fails without touching `state` if a
    /// density would turn negative or non-finite.
    pub fn step(&mut self, state: &mut StateField, dt: f64) -> Result<()> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidTimeStep(dt));
        }
        self.check_compatible(state)?;
        self.evaluator.eval(state.deviations(), &mut self.k1);
        self.euler_stage(state, dt);
        self.stage.check_admissible()?;
        if self.method == Method::Rk2Ssp {
            self.evaluator.eval(self.stage.deviations(), &mut self.k2);
            self.finish_heun(state, dt)?;
        }
        self.commit(state);
        Ok(())
    }

    /// One step with the largest admissible size, cut short to land on
    /// `stop`. The size is shrunk if the intermediate RK stage would violate
    /// its own positivity limit. Returns the step actually taken; `state.t`
    /// equals `stop` exactly when the step lands.
    pub fn advance(&mut self, state: &mut StateField, cfl_safety: f64, dt_max: f64, stop: f64) -> Result<f64> {
        self.check_compatible(state)?;
        let bounds = self.evaluator.eval(state.deviations(), &mut self.k1);
        let mut dt = DtLimits::from_bounds(&bounds, &self.params, &self.grid).combined(cfl_safety, dt_max);
        let mut landing = state.t + 1.000_001 * dt >= stop;
        if landing {
            dt = stop - state.t;
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidTimeStep(dt));
        }
        self.euler_stage(state, dt);
        self.stage.check_admissible()?;
        if self.method == Method::Rk2Ssp {
            for _ in 0..8 {
                let bounds = self.evaluator.eval(self.stage.deviations(), &mut self.k2);
                // The second substep needs only the unscaled limit; the safety
                // factor applies when a shorter step has to be chosen.
                let limits = DtLimits::from_bounds(&bounds, &self.params, &self.grid);
                if dt <= limits.combined(1.0, f64::INFINITY) {
                    break;
                }
                dt = limits.combined(cfl_safety, f64::INFINITY);
                landing = false;
                self.euler_stage(state, dt);
                self.stage.check_admissible()?;
            }
            self.finish_heun(state, dt)?;
        }
        if landing {
            self.stage.t = stop;
        }
        self.commit(state);
        Ok(dt)
    }

    /// `stage = state + dt·k1`
    fn euler_stage(&mut self, state: &StateField, dt: f64) {
        let dev = self.stage.deviations_mut();
        for s in 0..3 {
            for ((out, x), k) in dev[s].iter_mut().zip(&state.deviations()[s]).zip(&self.k1[s]) {
                *out = x + dt * k;
            }
        }
        self.stage.t = state.t + dt;
    }

    /// `stage = (state + stage + dt·k2) / 2` with `k2 = rhs(stage)`
    fn finish_heun(&mut self, state: &StateField, dt: f64) -> Result<()> {
        let dev = self.stage.deviations_mut();
        for s in 0..3 {
            for ((out, x), k) in dev[s].iter_mut().zip(&state.deviations()[s]).zip(&self.k2[s]) {
                *out = 0.5 * x + 0.5 * (*out + dt * k);
            }
        }
        self.stage.check_admissible()
    }

    fn commit(&mut self, state: &mut StateField) {
        let t = self.stage.t;
        core::mem::swap(state.deviations_mut(), self.stage.deviations_mut());
        state.t = t;
    }
}

/// One step of size `dt` from `state`.
pub fn step(state: &StateField, params: &ModelParams, grid: &Grid, dt: f64, method: Method) -> Result<StateField> {
    let mut stepper = Stepper::new(params, grid, state.reference(), method)?;
    let mut next = state.clone();
    stepper.step(&mut next, dt)?;
    Ok(next)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub state: StateField,
    pub steps: usize,
}

/// Integrates from `initial.t` to `cfg.t_end`, reporting to `observer`.
pub fn run(
    initial: &StateField,
    params: &ModelParams,
    grid: &Grid,
    cfg: &StepConfig,
    observer: &mut impl Observer,
) -> Result<StateField> {
    run_detailed(initial, params, grid, cfg, observer).map(|o| o.state)
}

pub fn run_detailed(
    initial: &StateField,
    params: &ModelParams,
    grid: &Grid,
    cfg: &StepConfig,
    observer: &mut impl Observer,
) -> Result<RunOutcome> {
    cfg.validate()?;
    params.validate(true)?;
    initial.check_admissible()?;
    for species in Species::ALL {
        if !(initial.max_density(species) > 0.0) {
            return Err(Error::VanishingSpecies { species });
        }
    }

    let mut stops: Vec<f64> = cfg
        .checkpoints
        .iter()
        .copied()
        .chain(core::iter::once(cfg.t_end))
        .filter(|t| *t > initial.t)
        .collect();
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let mut stepper = Stepper::new(params, grid, initial.reference(), cfg.method)?;
    let mut state = initial.clone();
    observer.observe(&state);

    let mut steps = 0;
    for stop in stops {
        while state.t < stop {
            if steps == cfg.max_steps {
                return Err(Error::StepLimit {
                    limit: cfg.max_steps,
                    t: state.t,
                });
            }
            stepper.advance(&mut state, cfg.cfl_safety, cfg.dt_max, stop)?;
            let arrived = state.t == stop;
            steps += 1;
            if arrived || steps % cfg.observe_every == 0 {
                observer.observe(&state);
            }
        }
    }
    Ok(RunOutcome { state, steps })
}
