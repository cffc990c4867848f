//! Norms, the Lyapunov energy and exponential-decay fits.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::params::ModelParams;
use crate::state::{Species, StateField};
use crate::steady::SteadyState;

/// Per-snapshot scalars. Undefined quantities (the energy of a state with a
/// vanishing cell) are NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub linf_u: f64,
    pub linf_v: f64,
    pub linf_w: f64,
    /// `Σ cells · cell volume`
    pub l1_u: f64,
    pub l1_v: f64,
    pub l1_w: f64,
    pub l2_dist_u: f64,
    pub l2_dist_v: f64,
    pub l2_dist_w: f64,
    pub linf_dist_u: f64,
    pub linf_dist_v: f64,
    pub linf_dist_w: f64,
    pub grad_l2_u: f64,
    pub grad_l2_v: f64,
    /// Largest face-gradient magnitude; with `linf_u` this is the discrete
    /// `W^{1,∞}` norm.
    pub grad_linf_u: f64,
    pub grad_linf_v: f64,
    pub energy: f64,
    /// `(1 + b1 b2 / b3) ∫u + b1 ∫v + b1 b2 ∫w`
    pub mass_y1: f64,
}

impl DiagnosticsRecord {
    pub const FIELDS: [&'static str; 19] = [
        "t",
        "linf_u",
        "linf_v",
        "linf_w",
        "l1_u",
        "l1_v",
        "l1_w",
        "l2_dist_u",
        "l2_dist_v",
        "l2_dist_w",
        "linf_dist_u",
        "linf_dist_v",
        "linf_dist_w",
        "grad_l2_u",
        "grad_l2_v",
        "grad_linf_u",
        "grad_linf_v",
        "energy",
        "mass_y1",
    ];

    pub fn to_array(&self) -> [f64; 19] {
        [
            self.t,
            self.linf_u,
            self.linf_v,
            self.linf_w,
            self.l1_u,
            self.l1_v,
            self.l1_w,
            self.l2_dist_u,
            self.l2_dist_v,
            self.l2_dist_w,
            self.linf_dist_u,
            self.linf_dist_v,
            self.linf_dist_w,
            self.grad_l2_u,
            self.grad_l2_v,
            self.grad_linf_u,
            self.grad_linf_v,
            self.energy,
            self.mass_y1,
        ]
    }

    pub fn from_array(a: [f64; 19]) -> Self {
        DiagnosticsRecord {
            t: a[0],
            linf_u: a[1],
            linf_v: a[2],
            linf_w: a[3],
            l1_u: a[4],
            l1_v: a[5],
            l1_w: a[6],
            l2_dist_u: a[7],
            l2_dist_v: a[8],
            l2_dist_w: a[9],
            linf_dist_u: a[10],
            linf_dist_v: a[11],
            linf_dist_w: a[12],
            grad_l2_u: a[13],
            grad_l2_v: a[14],
            grad_linf_u: a[15],
            grad_linf_v: a[16],
            energy: a[17],
            mass_y1: a[18],
        }
    }

    /// `‖u - u*‖∞ + ‖v - v*‖∞ + ‖w - w*‖∞`
    pub fn linf_distance(&self) -> f64 {
        self.linf_dist_u + self.linf_dist_v + self.linf_dist_w
    }

    /// Discrete `‖u‖_{W^{1,∞}} + ‖v‖_{W^{1,∞}} + ‖w‖_{L^∞}`.
    pub fn boundedness_norm(&self) -> f64 {
        self.linf_u + self.grad_linf_u + self.linf_v + self.grad_linf_v + self.linf_w
    }
}

/// `l* (x - ln(1 + x))` with `x = (l - l*)/l*`, accurate for small `x`.
fn entropy_integrand(offset: f64, level: f64) -> f64 {
    let x = offset / level;
    let phi = if x.abs() < 1e-3 {
        // x²/2 - x³/3 + x⁴/4 - ... ; the truncation error is below x⁸/8.
        let mut term = x;
        let mut sum = 0.0;
        for k in 2..=7 {
            term *= -x;
            sum -= term / k as f64;
        }
        sum
    } else {
        x - libm::log1p(x)
    };
    level * phi
}

/// `E = (1/b3) E_u + (1/b2) E_v + E_w` with `E_l = ∫ l - l* - l* ln(l/l*)`,
/// integrated by the midpoint rule.
pub fn lyapunov_energy(state: &StateField, steady: &SteadyState, params: &ModelParams, grid: &Grid) -> Result<f64> {
    let weights = [1.0 / params.b3, 1.0 / params.b2, 1.0];
    let levels = state.reference().levels();
    let mut total = 0.0;
    for species in Species::ALL {
        let s = species.index();
        let star = steady.level(species);
        let mut sum = 0.0;
        for (cell, offset) in state.offset_from(species, star).enumerate() {
            let value = levels[s] + state.deviation(species)[cell];
            if !(value > 0.0) {
                return Err(Error::NonPositiveDensity { species, cell, value });
            }
            sum += entropy_integrand(offset, star);
        }
        total += weights[s] * sum;
    }
    Ok(total * grid.cell_volume())
}

fn face_gradient_norms(field: &[f64], grid: &Grid) -> (f64, f64) {
    let mut sum_sq = 0.0;
    let mut max = 0.0_f64;
    let mut visit = |a: usize, b: usize, inv_h: f64| {
        let g = (field[b] - field[a]) * inv_h;
        sum_sq += g * g;
        max = max.max(g.abs());
    };
    grid.for_each_x_face(|_, a, b, inv_h| visit(a, b, inv_h));
    grid.for_each_y_face(|_, a, b, inv_h| visit(a, b, inv_h));
    (libm::sqrt(sum_sq * grid.cell_volume()), max)
}

/// Collects every diagnostic for one state.
pub fn record(state: &StateField, steady: &SteadyState, params: &ModelParams, grid: &Grid) -> DiagnosticsRecord {
    let vol = grid.cell_volume();
    let levels = state.reference().levels();
    let mut linf = [0.0; 3];
    let mut l1 = [0.0; 3];
    let mut l2_dist = [0.0; 3];
    let mut linf_dist = [0.0; 3];
    for species in Species::ALL {
        let s = species.index();
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for d in state.deviation(species) {
            let value = levels[s] + d;
            max = max.max(value);
            sum += value;
        }
        linf[s] = max;
        l1[s] = sum * vol;

        let mut sq = 0.0;
        let mut dmax = 0.0_f64;
        for off in state.offset_from(species, steady.level(species)) {
            sq += off * off;
            dmax = dmax.max(off.abs());
        }
        l2_dist[s] = libm::sqrt(sq * vol);
        linf_dist[s] = dmax;
    }
    let (grad_l2_u, grad_linf_u) = face_gradient_norms(state.deviation(Species::Prey), grid);
    let (grad_l2_v, grad_linf_v) = face_gradient_norms(state.deviation(Species::Predator), grid);
    let energy = lyapunov_energy(state, steady, params, grid).unwrap_or(f64::NAN);
    let ModelParams { b1, b2, b3, .. } = *params;
    DiagnosticsRecord {
        t: state.t,
        linf_u: linf[0],
        linf_v: linf[1],
        linf_w: linf[2],
        l1_u: l1[0],
        l1_v: l1[1],
        l1_w: l1[2],
        l2_dist_u: l2_dist[0],
        l2_dist_v: l2_dist[1],
        l2_dist_w: l2_dist[2],
        linf_dist_u: linf_dist[0],
        linf_dist_v: linf_dist[1],
        linf_dist_w: linf_dist[2],
        grad_l2_u,
        grad_l2_v,
        grad_linf_u,
        grad_linf_v,
        energy,
        mass_y1: (1.0 + b1 * b2 / b3) * l1[0] + b1 * l1[1] + b1 * b2 * l1[2],
    }
}

/// Closed time interval used for fitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub t_start: f64,
    pub t_end: f64,
}

impl Window {
    pub fn new(t_start: f64, t_end: f64) -> Self {
        Window { t_start, t_end }
    }

    /// `[t_end / 2, t_end]`
    pub fn second_half(t_end: f64) -> Self {
        Window::new(0.5 * t_end, t_end)
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_start && t <= self.t_end
    }
}

/// `d(t) ≈ c1 · exp(-c2 t)` fitted by least squares on `ln d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub c1: f64,
    pub c2: f64,
    pub r_squared: f64,
    pub window: Window,
    pub samples: usize,
}

pub const MIN_FIT_SAMPLES: usize = 10;

/// Fits the total `L∞` distance to the steady state over `window`.
pub fn fit_decay(records: &[DiagnosticsRecord], window: Window) -> Result<DecayFit> {
    let mut points: Vec<(f64, f64)> = Vec::new();
    for r in records.iter().filter(|r| window.contains(r.t)) {
        let d = r.linf_distance();
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NonPositiveDistance { t: r.t, value: d });
        }
        points.push((r.t, libm::log(d)));
    }
    if points.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientSamples {
            required: MIN_FIT_SAMPLES,
            found: points.len(),
        });
    }
    let n = points.len() as f64;
    let t_mean = points.iter().map(|p| p.0).sum::<f64>() / n;
    let y_mean = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for &(t, y) in &points {
        stt += (t - t_mean) * (t - t_mean);
        sty += (t - t_mean) * (y - y_mean);
        syy += (y - y_mean) * (y - y_mean);
    }
    if !(stt > 0.0) {
        return Err(Error::InsufficientSamples {
            required: MIN_FIT_SAMPLES,
            found: 1,
        });
    }
    let slope = sty / stt;
    let intercept = y_mean - slope * t_mean;
    let ss_res: f64 = points
        .iter()
        .map(|&(t, y)| {
            let e = y - (intercept + slope * t);
            e * e
        })
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(DecayFit {
        c1: libm::exp(intercept),
        c2: -slope,
        r_squared,
        window,
        samples: points.len(),
    })
}
