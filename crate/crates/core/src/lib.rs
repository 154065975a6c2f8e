//! Discrete-time simulation and expected-cost analysis of reliable message
//! delivery between two crash-prone processes over a lossy, fixed-delay link.
//!
//! The crate is organized bottom-up:
//!
//! - [`model`]: system and cost parameters, protocol selection, validation.
//! - [`protocols`]: the per-process state machines.
//! - [`engine`]: the tick-based simulator and its run traces.
//! - [`cost`]: waiting time, send counts and the cost functions.
//! - [`analysis`]: closed forms, Monte Carlo estimators, probes, optimizer.
//! - [`experiment`]: JSON-configured experiments and their output files.

// `!(x > 0.0)` style checks are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cost;
pub mod engine;
pub mod experiment;
pub mod model;
pub mod protocols;

use model::Violation;

pub use cost::{AvgCostSeries, Cost, CostBreakdown, Quantity};
pub use engine::{run_repeated, run_single, At, RepeatedTrace, RunTrace};
pub use model::{CostParams, ProtocolKind, ProtocolSpec, SystemParams};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid parameters: {}", join(.0))]
    Invalid(Vec<Violation>),
    #[error("precondition not met: {0}")]
    Precondition(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
