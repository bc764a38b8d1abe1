//! Command-line front end for `rfiot-core`: run configurations, analytic and
//! simulated coverage, parameter sweeps and slot optimisation, written out as
//! CSV plus a JSON manifest.

// `!(x > 0.0)` is the NaN-rejecting form used throughout
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod results;

pub use commands::{run, Command, Report};
pub use config::{parse_config, RunConfig};
