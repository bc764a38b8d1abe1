//! Coverage and throughput of cellular IoT devices powered by ambient RF
//! energy from the BS network.
//!
//! BSs form a Poisson point process. A device harvests energy during a
//! charging sub-slot and spends it on downlink reception and/or uplink
//! transmission in the rest of the slot. The crate computes the energy, SINR
//! and joint coverage probabilities with a dominant-BS approximation
//! ([`analytic`]), checks them against a Poisson-point-process simulator
//! ([`montecarlo`]) and searches for throughput-optimal slot partitions
//! ([`optimizer`]).

// `!(x > 0.0)` is the NaN-rejecting form used throughout
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod model;
pub mod montecarlo;
pub mod optimizer;
pub mod quadrature;
pub mod units;

use thiserror::Error;

pub use analytic::{DensitySource, LogBase, ModeRequest, Throughput};
pub use model::{
    CoverageEstimate, DistancePair, EstimateKind, Mode, SlotPartition, SystemParams,
};
pub use montecarlo::{
    ActivitySource, EnergyModel, EstimateBundle, InterferenceModel, SimConfig, TrialOutcome,
    Window,
};
pub use optimizer::{Objective, OptimizeSpec, Optimum};
pub use quadrature::{Integral, QuadError, QuadTol};
pub use units::Unit;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {}", .0.join("; "))]
    InvalidParams(Vec<String>),
    #[error("invalid slot partition ({tau1}, {tau2}, {tau3}): need tau1 > 0, tau2, tau3 >= 0 and a sum of 1")]
    InvalidSlots { tau1: f64, tau2: f64, tau3: f64 },
    #[error("invalid distance pair r1 = {r1}, r2 = {r2}: need 0 < r1 < r2")]
    InvalidDistances { r1: f64, r2: f64 },
    #[error("{0}")]
    Domain(String),
    #[error("{op} needs a {needed} slot partition (got tau2 = {tau2}, tau3 = {tau3})")]
    ModeMismatch {
        op: &'static str,
        needed: Mode,
        tau2: f64,
        tau3: f64,
    },
    #[error("quadrature failed: {0}")]
    Quadrature(#[from] QuadError),
    #[error("{retries} of {trials} trials needed a redraw (limit 1%)")]
    RetryRate { retries: u64, trials: u64 },
    #[error("invalid simulation config: {0}")]
    SimConfig(String),
    #[error("invalid optimizer spec: {0}")]
    OptimizeSpec(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
