//! Online task scheduling for heterogeneous MPSoCs driven by a fuzzy neural
//! network whose rule consequents are learned with NSGA-II.
//!
//! The crate is organized around the pipeline:
//!
//! * [`graphs`] — application DAGs (tasks, dependencies, communication costs)
//!   and architecture graphs (cores, V/F levels, thermal coupling).
//! * [`physics`] — power, RC-thermal and wear-out failure-rate models that
//!   score what a schedule does to the chip.
//! * [`fuzzy`] — the five-layer fuzzy neural network mapping a core state
//!   vector (utilization, power, temperature, failure rate) to an assignment
//!   degree.
//! * [`sim`] — the online scheduling loop: urgency ordering, candidate
//!   prediction, degree-based selection, and a discrete-event simulation
//!   that accounts temperature, energy and failure-rate over time.
//! * [`evolution`] — NSGA-II over consequent vectors plus the training
//!   pipeline that extracts Pareto middle points and averages them into the
//!   final rule base.

pub mod evolution;
pub mod fuzzy;
pub mod graphs;
pub mod physics;
pub mod rng;
pub mod sim;
