//! Joint batching and uplink bandwidth allocation for edge inference.
//!
//! Tasks arrive over time at an edge server, upload a payload over a shared
//! channel, and are served in batches whose latency grows linearly with
//! batch size. The crate provides:
//!
//! - [`model`]: domain types and the feasibility checker
//! - [`scenario`]: seeded scenario generation and JSON persistence
//! - [`jbas`]: the dual-decomposition batching and allocation solver
//! - [`holes`]: post-hoc admission of dropped tasks into spare capacity
//! - [`baselines`]: equal-split, greedy and single-batch schedulers
//! - [`oracle`]: exhaustive search on small instances
//! - [`harness`]: parameter sweeps and CSV output

pub mod baselines;
pub mod harness;
pub mod holes;
pub mod jbas;
pub mod model;
pub mod oracle;
pub mod scenario;
pub(crate) mod sweep;

pub use model::{
    batch_delay, check_schedule, required_bandwidth, spectral_efficiency, throughput, Allocation, Assignment,
    Constraint, DelayModel, FeasibilityReport, Grant, ModelError, Scenario, Schedule, ScheduleError, Segment, Task,
    Tolerances, Violation,
};
