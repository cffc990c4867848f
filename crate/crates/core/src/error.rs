use core::fmt;

use crate::state::Species;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("steady-state analysis requires unit growth rates (r1 = r2 = r3 = 1)")]
    NonUnitGrowthRates,
    #[error("J(w) stayed non-positive after {expansions} bracket expansions (upper = {upper})")]
    BracketFailure { expansions: u32, upper: f64 },
    #[error("bisection stalled with |J(w)| = {residual} above tolerance {tol}")]
    ToleranceNotReached { residual: f64, tol: f64 },
    #[error("steady state has non-positive {species} component {value}")]
    NonPositiveSteadyState { species: Species, value: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[error("array of length {found} does not match {expected} {what}")]
    DimensionMismatch {
        what: Located,
        expected: usize,
        found: usize,
    },
    #[error("carrier is negative ({value}) at cell {cell}")]
    NegativeCarrier { cell: usize, value: f64 },
    #[error("{species} density became negative ({value}) at cell {cell}, t = {t}; time step violates the CFL limit")]
    NegativeDensity {
        species: Species,
        cell: usize,
        value: f64,
        t: f64,
    },
    #[error("{species} density is not finite at cell {cell}, t = {t}")]
    NonFinite { species: Species, cell: usize, t: f64 },
    #[error("{species} is identically zero in the initial data")]
    VanishingSpecies { species: Species },
    #[error("energy needs strictly positive densities; {species} = {value} at cell {cell}")]
    NonPositiveDensity { species: Species, cell: usize, value: f64 },
    #[error("invalid time step {0}")]
    InvalidTimeStep(f64),
    #[error("step limit of {limit} reached at t = {t}")]
    StepLimit { limit: usize, t: f64 },
    #[error("reference state is inconsistent with the model parameters")]
    ReferenceMismatch,
    #[error("decay fit needs at least {required} samples in the window, found {found}")]
    InsufficientSamples { required: usize, found: usize },
    #[error("distance to the steady state is {value} at t = {t}; the log-linear fit needs positive samples")]
    NonPositiveDistance { t: f64, value: f64 },
}

/// What a length check was measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Located {
    Cells,
    Faces,
}

impl fmt::Display for Located {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Located::Cells => f.write_str("grid cells"),
            Located::Faces => f.write_str("grid faces"),
        }
    }
}
