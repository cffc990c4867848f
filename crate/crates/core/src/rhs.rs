//! Right-hand side of the semi-discrete system.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::params::ModelParams;
use crate::state::{Reference, StateField};
use crate::steady::steady_state_residual;

/// Residual allowed when accepting a steady state as the expansion point.
const REFERENCE_RESIDUAL_TOL: f64 = 1e-8;

/// Reaction terms expanded about an equilibrium reference `ℓ`:
///
/// ```text
/// f_u = u (c_u - r1 δu - b1 δv - b3 δw)
/// f_v = v (c_v - r2 δv +    δu - b2 δw)
/// f_w = w (c_w - r3 (w^σ - ℓ_w^σ) + δu + δv)
/// ```
///
/// where `c` is the bracket evaluated at `ℓ`: `(r1, r2, r3)` at the origin
/// and exactly zero at the coexistence state.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Reactions {
    params: ModelParams,
    levels: [f64; 3],
    constants: [f64; 3],
    w_level_pow: f64,
    integer_sigma: Option<u32>,
}

impl Reactions {
    pub(crate) fn new(params: &ModelParams, reference: &Reference) -> Result<Self> {
        let levels = reference.levels();
        let constants = match reference {
            Reference::Origin => [params.r1, params.r2, params.r3],
            Reference::Coexistence(ss) => {
                if !params.has_unit_growth_rates() {
                    return Err(Error::ReferenceMismatch);
                }
                let residual = steady_state_residual(params, ss.as_array());
                if residual.iter().any(|r| !((*r).abs() < REFERENCE_RESIDUAL_TOL)) {
                    return Err(Error::ReferenceMismatch);
                }
                [0.0; 3]
            }
        };
        Ok(Reactions {
            params: *params,
            levels,
            constants,
            w_level_pow: libm::pow(levels[2], params.sigma),
            integer_sigma: (params.sigma == libm::round(params.sigma) && params.sigma <= 8.0)
                .then_some(params.sigma as u32),
        })
    }

    /// `w^σ - ℓ_w^σ` without cancellation for small `δw`.
    #[inline]
    fn w_pow_increment(&self, dw: f64) -> f64 {
        let level = self.levels[2];
        if let Some(n) = self.integer_sigma {
            let w = level + dw;
            if n == 2 {
                return dw * (w + level);
            }
            // w^n - ℓ^n = δ Σ_k w^k ℓ^(n-1-k)
            let mut sum = 0.0;
            let mut wk = 1.0;
            for _ in 0..n {
                sum = sum * level + wk;
                wk *= w;
            }
            return if level == 0.0 { wk } else { dw * sum };
        }
        if level == 0.0 {
            libm::pow(dw, self.params.sigma)
        } else {
            self.w_level_pow * libm::expm1(self.params.sigma * libm::log1p(dw / level))
        }
    }

    #[inline]
    pub(crate) fn at(&self, du: f64, dv: f64, dw: f64) -> [f64; 3] {
        let p = &self.params;
        let [lu, lv, lw] = self.levels;
        let [cu, cv, cw] = self.constants;
        [
            (lu + du) * (cu - p.r1 * du - p.b1 * dv - p.b3 * dw),
            (lv + dv) * (cv - p.r2 * dv + du - p.b2 * dw),
            (lw + dw) * (cw - p.r3 * self.w_pow_increment(dw) + dv + du),
        ]
    }
}

/// Pointwise reaction right-hand sides `(f_u, f_v, f_w)`.
pub fn reaction_terms(state: &StateField, params: &ModelParams) -> Result<[Vec<f64>; 3]> {
    let reactions = Reactions::new(params, state.reference())?;
    let [du, dv, dw] = state.deviations();
    let n = state.cells();
    let mut out = [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
    for c in 0..n {
        let f = reactions.at(du[c], dv[c], dw[c]);
        for s in 0..3 {
            out[s].push(f[s]);
        }
    }
    Ok(out)
}

/// Full semi-discrete right-hand side: diffusion, both taxis terms and
/// reactions.
pub fn rhs(state: &StateField, params: &ModelParams, grid: &Grid) -> Result<[Vec<f64>; 3]> {
    for d in state.deviations() {
        grid.check_cells(d)?;
    }
    let mut evaluator = RhsEvaluator::new(params, grid, state.reference())?;
    let mut out = [grid.zeros(), grid.zeros(), grid.zeros()];
    let _ = evaluator.eval(state.deviations(), &mut out);
    Ok(out)
}

/// Extremes seen while evaluating the right-hand side, enough to rebuild the
/// step-size limit without another pass over the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Bounds {
    pub(crate) max_density: [f64; 3],
    /// Largest `max(ξ|∇u|, χ|∇(uv)|)` over the faces of each axis.
    pub(crate) face_speed: [f64; 2],
}

/// Net flux across one face from cell `a` to its neighbour `b`, with the
/// taxis carrier upwinded. Inputs are `[δu, δv, δw, uv - ℓ_u ℓ_v]`.
#[derive(Debug, Clone, Copy)]
struct FaceFlux {
    d1: f64,
    d2: f64,
    xi: f64,
    chi: f64,
    lv: f64,
    lw: f64,
}

impl FaceFlux {
    /// Returns the flux added to `a` (and removed from `b`) for each species,
    /// plus the face speed `max(ξ|∇u|, χ|∇(uv)|)`.
    #[inline(always)]
    fn at(&self, inv_h: f64, a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
        let gu = (b[0] - a[0]) * inv_h;
        let gv = (b[1] - a[1]) * inv_h;
        let gw = (b[2] - a[2]) * inv_h;
        let gs = (b[3] - a[3]) * inv_h;
        let vel_v = self.xi * gu;
        let up_v = self.lv + if vel_v > 0.0 { a[1] } else { b[1] };
        let vel_w = self.chi * gs;
        let up_w = self.lw + if vel_w > 0.0 { a[2] } else { b[2] };
        [
            self.d1 * gu * inv_h,
            (self.d2 * gv - vel_v * up_v) * inv_h,
            (gw - vel_w * up_w) * inv_h,
            if vel_v.abs() > vel_w.abs() {
                vel_v.abs()
            } else {
                vel_w.abs()
            },
        ]
    }
}

/// Reusable scratch space for repeated right-hand side evaluations about a
/// fixed reference.
#[derive(Debug, Clone)]
pub(crate) struct RhsEvaluator {
    grid: Grid,
    reactions: Reactions,
    signal: Vec<f64>,
}

impl RhsEvaluator {
    pub(crate) fn new(params: &ModelParams, grid: &Grid, reference: &Reference) -> Result<Self> {
        Ok(RhsEvaluator {
            grid: *grid,
            reactions: Reactions::new(params, reference)?,
            signal: grid.zeros(),
        })
    }

    /// Overwrites `out` with the time derivative of `dev`.
    pub(crate) fn eval(&mut self, dev: &[Vec<f64>; 3], out: &mut [Vec<f64>; 3]) -> Bounds {
        let p = self.reactions.params;
        let [lu, lv, lw] = self.reactions.levels;
        let [du, dv, dw] = dev;
        let [ou, ov, ow] = out;
        let n = self.grid.cells();
        let (du, dv, dw) = (&du[..n], &dv[..n], &dw[..n]);
        let (ou, ov, ow) = (&mut ou[..n], &mut ov[..n], &mut ow[..n]);
        let signal = &mut self.signal[..n];

        let mut max_dev = [f64::NEG_INFINITY; 3];
        for c in 0..n {
            let (a, b, d) = (du[c], dv[c], dw[c]);
            let [fu, fv, fw] = self.reactions.at(a, b, d);
            ou[c] = fu;
            ov[c] = fv;
            ow[c] = fw;
            // uv minus its constant part ℓ_u ℓ_v; the gradient is unchanged.
            signal[c] = lu * b + lv * a + a * b;
            // Plain comparisons: a NaN here is caught by the admissibility
            // check, and `f64::max` costs several instructions per call.
            for (m, x) in max_dev.iter_mut().zip([a, b, d]) {
                if x > *m {
                    *m = x;
                }
            }
        }

        // Diffusion of all three species and both taxis fluxes share one
        // sweep over the faces; the arithmetic matches the standalone ops.
        let flux = FaceFlux {
            d1: p.d1,
            d2: p.d2,
            xi: p.xi,
            chi: p.chi,
            lv,
            lw,
        };
        let [nx, ny] = [self.grid.nx(), self.grid.ny()];
        let h = self.grid.h();
        let mut face_speed = [0.0_f64; 2];

        let inv_h = 1.0 / h[0];
        for j in 0..ny {
            let r = j * nx..(j + 1) * nx;
            let (du, dv, dw, sg) = (&du[r.clone()], &dv[r.clone()], &dw[r.clone()], &signal[r.clone()]);
            let (ou, ov, ow) = (&mut ou[r.clone()], &mut ov[r.clone()], &mut ow[r]);
            let mut speed = face_speed[0];
            for k in 1..nx {
                let [qu, qv, qw, s] = flux.at(
                    inv_h,
                    [du[k - 1], dv[k - 1], dw[k - 1], sg[k - 1]],
                    [du[k], dv[k], dw[k], sg[k]],
                );
                ou[k - 1] += qu;
                ou[k] -= qu;
                ov[k - 1] += qv;
                ov[k] -= qv;
                ow[k - 1] += qw;
                ow[k] -= qw;
                if s > speed {
                    speed = s;
                }
            }
            face_speed[0] = speed;
        }

        if self.grid.dim() == 2 {
            let inv_h = 1.0 / h[1];
            let mut speed = 0.0_f64;
            for k in 1..ny {
                let lo = (k - 1) * nx..k * nx;
                let hi = k * nx..(k + 1) * nx;
                let (ou_lo, ou_hi) = ou.split_at_mut(k * nx);
                let (ov_lo, ov_hi) = ov.split_at_mut(k * nx);
                let (ow_lo, ow_hi) = ow.split_at_mut(k * nx);
                let (ou_lo, ov_lo, ow_lo) = (&mut ou_lo[lo.clone()], &mut ov_lo[lo.clone()], &mut ow_lo[lo.clone()]);
                let (ou_hi, ov_hi, ow_hi) = (&mut ou_hi[..nx], &mut ov_hi[..nx], &mut ow_hi[..nx]);
                let (du_lo, dv_lo, dw_lo, sg_lo) = (&du[lo.clone()], &dv[lo.clone()], &dw[lo.clone()], &signal[lo]);
                let (du_hi, dv_hi, dw_hi, sg_hi) = (&du[hi.clone()], &dv[hi.clone()], &dw[hi.clone()], &signal[hi]);
                for i in 0..nx {
                    let [qu, qv, qw, s] = flux.at(
                        inv_h,
                        [du_lo[i], dv_lo[i], dw_lo[i], sg_lo[i]],
                        [du_hi[i], dv_hi[i], dw_hi[i], sg_hi[i]],
                    );
                    ou_lo[i] += qu;
                    ou_hi[i] -= qu;
                    ov_lo[i] += qv;
                    ov_hi[i] -= qv;
                    ow_lo[i] += qw;
                    ow_hi[i] -= qw;
                    if s > speed {
                        speed = s;
                    }
                }
            }
            face_speed[1] = speed;
        }

        Bounds {
            max_density: [lu + max_dev[0], lv + max_dev[1], lw + max_dev[2]],
            face_speed,
        }
    }
}
