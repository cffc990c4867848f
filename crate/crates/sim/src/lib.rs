//! Configuration files, CSV output, gnuplot scripts, parameter sweeps and the
//! command-line interface around `alarmtaxis-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod config;
pub mod output;
pub mod runner;
pub mod sweep;

pub use config::{ConfigError, ExperimentConfig};
pub use runner::{simulate, RunError, RunReport};
pub use sweep::{run_sweep, SweepReport};
