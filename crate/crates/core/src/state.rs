//! Species densities on a grid.
//!
//! A [`StateField`] stores each species as a constant reference level plus a
//! per-cell deviation. The reference is either zero or the coexistence steady
//! state. Near the steady state this keeps full relative precision in the
//! distance to it, which would otherwise be lost to rounding once the
//! deviation drops below the spacing of doubles around the density itself.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Located, Result};
use crate::grid::Grid;
use crate::steady::SteadyState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Species {
    /// `u`
    Prey,
    /// `v`
    Predator,
    /// `w`
    Secondary,
}

impl Species {
    pub const ALL: [Species; 3] = [Species::Prey, Species::Predator, Species::Secondary];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn symbol(self) -> &'static str {
        ["u", "v", "w"][self.index()]
    }
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Constant level the stored deviations are measured from. Both choices are
/// equilibria of the reaction terms, which lets the reactions be expanded
/// about the reference with the constant part dropped exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    Origin,
    Coexistence(SteadyState),
}

impl Reference {
    pub fn levels(&self) -> [f64; 3] {
        match self {
            Reference::Origin => [0.0; 3],
            Reference::Coexistence(ss) => ss.as_array(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateField {
    pub t: f64,
    reference: Reference,
    deviation: [Vec<f64>; 3],
}

impl StateField {
    /// Absolute densities at time 0.
    pub fn from_densities(grid: &Grid, u: Vec<f64>, v: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        Self::from_deviations(grid, Reference::Origin, [u, v, w])
    }

    pub fn from_deviations(grid: &Grid, reference: Reference, deviation: [Vec<f64>; 3]) -> Result<Self> {
        for (field, species) in deviation.iter().zip(Species::ALL) {
            if field.len() != grid.cells() {
                return Err(Error::DimensionMismatch {
                    what: Located::Cells,
                    expected: grid.cells(),
                    found: field.len(),
                });
            }
            if let Some(cell) = field.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite { species, cell, t: 0.0 });
            }
        }
        Ok(StateField {
            t: 0.0,
            reference,
            deviation,
        })
    }

    /// Spatially constant densities.
    pub fn uniform(grid: &Grid, levels: [f64; 3]) -> Self {
        let n = grid.cells();
        StateField {
            t: 0.0,
            reference: Reference::Origin,
            deviation: levels.map(|l| alloc::vec![l; n]),
        }
    }

    /// The steady state itself, stored as zero deviation from it.
    pub fn at_steady_state(grid: &Grid, steady: &SteadyState) -> Self {
        StateField {
            t: 0.0,
            reference: Reference::Coexistence(*steady),
            deviation: [grid.zeros(), grid.zeros(), grid.zeros()],
        }
    }

    /// Same densities measured from another reference.
    pub fn rebased(&self, reference: Reference) -> Self {
        let old = self.reference.levels();
        let new = reference.levels();
        let deviation = core::array::from_fn(|s| {
            let shift = old[s] - new[s];
            self.deviation[s].iter().map(|d| shift + d).collect()
        });
        StateField {
            t: self.t,
            reference,
            deviation,
        }
    }

    pub fn reference(&self) -> &Reference {
        &self.reference
    }

    pub fn cells(&self) -> usize {
        self.deviation[0].len()
    }

    pub fn deviation(&self, species: Species) -> &[f64] {
        &self.deviation[species.index()]
    }

    pub fn deviations(&self) -> &[Vec<f64>; 3] {
        &self.deviation
    }

    pub(crate) fn deviations_mut(&mut self) -> &mut [Vec<f64>; 3] {
        &mut self.deviation
    }

    pub fn density(&self, species: Species, cell: usize) -> f64 {
        self.reference.levels()[species.index()] + self.deviation[species.index()][cell]
    }

    /// Absolute densities of one species.
    pub fn densities(&self, species: Species) -> Vec<f64> {
        let level = self.reference.levels()[species.index()];
        self.deviation[species.index()].iter().map(|d| level + d).collect()
    }

    /// `density - level` per cell, computed without forming the density when
    /// the level equals the reference.
    pub fn offset_from(&self, species: Species, level: f64) -> impl Iterator<Item = f64> + '_ {
        let shift = self.reference.levels()[species.index()] - level;
        self.deviation[species.index()].iter().map(move |d| shift + d)
    }

    pub fn max_density(&self, species: Species) -> f64 {
        let level = self.reference.levels()[species.index()];
        self.deviation[species.index()]
            .iter()
            .fold(f64::NEG_INFINITY, |m, d| m.max(level + d))
    }

    pub fn min_density(&self, species: Species) -> f64 {
        let level = self.reference.levels()[species.index()];
        self.deviation[species.index()]
            .iter()
            .fold(f64::INFINITY, |m, d| m.min(level + d))
    }

    /// First non-finite or negative entry, as an error.
    pub fn check_admissible(&self) -> Result<()> {
        let levels = self.reference.levels();
        // Fast path: a non-negative minimum and a finite sum (NaN or inf
        // poisons the sum). Anything else goes to the exact loop below.
        let fine = Species::ALL.iter().all(|s| {
            let level = levels[s.index()];
            let dev = &self.deviation[s.index()];
            let mut low = [f64::INFINITY; 4];
            let mut sum = [0.0; 4];
            let chunks = dev.chunks_exact(4);
            let rest = chunks.remainder();
            for c in chunks {
                for k in 0..4 {
                    let v = level + c[k];
                    low[k] = if v < low[k] { v } else { low[k] };
                    sum[k] += v;
                }
            }
            for d in rest {
                let v = level + d;
                low[0] = if v < low[0] { v } else { low[0] };
                sum[0] += v;
            }
            let low = low[0].min(low[1]).min(low[2].min(low[3]));
            low >= 0.0 && (sum[0] + sum[1] + sum[2] + sum[3]).is_finite()
        });
        if fine {
            return Ok(());
        }
        for species in Species::ALL {
            let level = levels[species.index()];
            for (cell, d) in self.deviation[species.index()].iter().enumerate() {
                let value = level + d;
                if !value.is_finite() {
                    return Err(Error::NonFinite {
                        species,
                        cell,
                        t: self.t,
                    });
                }
                if value < 0.0 {
                    return Err(Error::NegativeDensity {
                        species,
                        cell,
                        value,
                        t: self.t,
                    });
                }
            }
        }
        Ok(())
    }
}
