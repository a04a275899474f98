//! Application DAGs and architecture graphs.
//!
//! An application is a weighted DAG of tasks (nodes carry per-class WCETs,
//! optional deadlines and heterogeneity factors; edges carry communication
//! costs). An architecture is a set of heterogeneous cores, each with an
//! ordered list of voltage/frequency levels and thermal conductances to its
//! neighbors, plus the chip-wide physical constants and normalization ranges.

mod app;
mod arch;
mod synthetic;

pub use app::{AppGraph, EdgeSpec, Task};
pub use arch::{ArchGraph, CoreSpec, Ranges, VfLevel};
pub use synthetic::{generate_synthetic, SynthConfig, SynthShape};

use thiserror::Error;

/// True for finite, strictly positive values (rejects NaN).
pub(crate) fn positive_finite(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

/// True for finite, non-negative values (rejects NaN).
pub(crate) fn non_negative_finite(x: f64) -> bool {
    x.is_finite() && x >= 0.0
}

/// Errors produced while parsing, generating or validating graphs.
#[derive(Debug, Error)]
pub enum GraphError {
    #[error("malformed graph document: {0}")]
    Parse(String),
    #[error("duplicate task id {0:?}")]
    DuplicateTask(String),
    #[error("task {task:?} has non-positive wcet for class {class:?}")]
    NonPositiveWcet { task: String, class: String },
    #[error("task {task:?} has no wcet entries")]
    EmptyWcet { task: String },
    #[error("task {task:?} has non-positive deadline")]
    NonPositiveDeadline { task: String },
    #[error("task {task:?} has non-positive hetero factor for class {class:?}")]
    NonPositiveHetero { task: String, class: String },
    #[error("self-edge on task {0:?}")]
    SelfEdge(String),
    #[error("edge {src:?} -> {dst:?} references unknown task {missing:?}")]
    DanglingEdge {
        src: String,
        dst: String,
        missing: String,
    },
    #[error("duplicate edge {src:?} -> {dst:?}")]
    DuplicateEdge { src: String, dst: String },
    #[error("edge {src:?} -> {dst:?} has negative communication cost")]
    NegativeComm { src: String, dst: String },
    #[error("graph has a cycle through task {0:?}")]
    Cycle(String),
    #[error("invalid synthetic-graph parameters: {0}")]
    InvalidParams(String),
    #[error("architecture graph invalid: {0}")]
    InvalidArch(String),
}
