//! Initial-data generators. All of them are smooth and respect the Neumann
//! boundary conditions except the Gaussian bumps, whose tails are merely small
//! at the boundary.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::state::{Reference, StateField};
use crate::steady::SteadyState;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// Spatially constant `(u, v, w)`.
    Constant([f64; 3]),
    /// `ℓ · (1 + amplitude · ψ)` around the steady state `ℓ`, where `ψ` is a
    /// raised cosine `Π_axes (1 + cos(mode π x / L)) / 2` taking values in
    /// `[0, 1]`. `mode = 0` gives a uniform shift.
    SteadyPerturbed { amplitude: f64, mode: u32 },
    /// `background` plus `count` Gaussian bumps per species with random centres.
    GaussianBumps {
        background: [f64; 3],
        amplitude: f64,
        width: f64,
        count: usize,
        seed: u64,
    },
    /// A random positive cosine series per species with up to `modes`
    /// wavenumbers per axis.
    RandomSmooth { modes: u32, seed: u64 },
}

impl InitialCondition {
    pub fn build(&self, grid: &Grid, steady: Option<&SteadyState>) -> Result<StateField> {
        match *self {
            InitialCondition::Constant(levels) => {
                for (i, l) in levels.iter().enumerate() {
                    if !(*l >= 0.0) || !l.is_finite() {
                        return Err(Error::InvalidParameter {
                            name: ["initial.u", "initial.v", "initial.w"][i],
                            value: *l,
                            reason: "constant level must be finite and non-negative",
                        });
                    }
                }
                Ok(StateField::uniform(grid, levels))
            }
            InitialCondition::SteadyPerturbed { amplitude, mode } => {
                let steady = steady.ok_or(Error::ReferenceMismatch)?;
                if !(amplitude > -1.0) || !amplitude.is_finite() {
                    return Err(Error::InvalidParameter {
                        name: "initial.amplitude",
                        value: amplitude,
                        reason: "relative amplitude must exceed -1",
                    });
                }
                let shape: Vec<f64> = (0..grid.cells()).map(|c| raised_cosine(grid, c, mode)).collect();
                let deviation = steady
                    .as_array()
                    .map(|level| shape.iter().map(|psi| level * amplitude * psi).collect());
                StateField::from_deviations(grid, Reference::Coexistence(*steady), deviation)
            }
            InitialCondition::GaussianBumps {
                background,
                amplitude,
                width,
                count,
                seed,
            } => {
                if !(width > 0.0) || !(amplitude >= 0.0) || background.iter().any(|b| !(*b >= 0.0)) {
                    return Err(Error::InvalidParameter {
                        name: "initial.width",
                        value: width,
                        reason: "bumps need positive width and non-negative amplitude and background",
                    });
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let length = grid.length();
                let fields = background.map(|b| {
                    let centres: Vec<[f64; 2]> = (0..count)
                        .map(|_| [rng.gen::<f64>() * length[0], rng.gen::<f64>() * length[1]])
                        .collect();
                    (0..grid.cells())
                        .map(|c| {
                            let x = grid.center(c);
                            let bumps: f64 = centres
                                .iter()
                                .map(|m| {
                                    let dy = if grid.dim() == 1 { 0.0 } else { x[1] - m[1] };
                                    let r2 = (x[0] - m[0]) * (x[0] - m[0]) + dy * dy;
                                    libm::exp(-r2 / (2.0 * width * width))
                                })
                                .sum();
                            b + amplitude * bumps
                        })
                        .collect()
                });
                StateField::from_deviations(grid, Reference::Origin, fields)
            }
            InitialCondition::RandomSmooth { modes, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let fields = [(); 3].map(|_| random_cosine_series(grid, modes, &mut rng));
                StateField::from_deviations(grid, Reference::Origin, fields)
            }
        }
    }
}

fn raised_cosine(grid: &Grid, cell: usize, mode: u32) -> f64 {
    if mode == 0 {
        return 1.0;
    }
    let x = grid.center(cell);
    let length = grid.length();
    (0..grid.dim())
        .map(|a| 0.5 * (1.0 + libm::cos(mode as f64 * PI * x[a] / length[a])))
        .product()
}

/// `c0 + Σ a_kl cos(kπx/Lx) cos(lπy/Ly)` with `Σ|a_kl| < c0`, so the field
/// stays strictly positive.
fn random_cosine_series(grid: &Grid, modes: u32, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let base = rng.gen_range(0.3..1.5);
    let budget = base * rng.gen_range(0.2..0.8);
    let ly_modes = if grid.dim() == 1 { 0 } else { modes };
    let mut terms: Vec<(u32, u32, f64)> = Vec::new();
    for k in 0..=modes {
        for l in 0..=ly_modes {
            if k + l > 0 {
                terms.push((k, l, rng.gen_range(-1.0..1.0)));
            }
        }
    }
    let total: f64 = terms.iter().map(|t| t.2.abs()).sum();
    let scale = if total > 0.0 { budget / total } else { 0.0 };
    let length = grid.length();
    (0..grid.cells())
        .map(|c| {
            let [x, y] = grid.center(c);
            base + terms
                .iter()
                .map(|&(k, l, a)| {
                    let cy = if grid.dim() == 1 {
                        1.0
                    } else {
                        libm::cos(l as f64 * PI * y / length[1])
                    };
                    scale * a * libm::cos(k as f64 * PI * x / length[0]) * cy
                })
                .sum::<f64>()
        })
        .collect()
}
