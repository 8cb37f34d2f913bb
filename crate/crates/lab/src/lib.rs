//! Experiment layer over `nbmp-core`: configuration, reproducible runs,
//! persisted outputs and the acceptance criteria.

pub mod config;
pub mod criteria;
pub mod io;
pub mod run;
pub mod study;

/// Top-level child keys of an experiment's root stream.
pub mod streams {
    pub const BOUNDARY: u64 = 0;
    pub const ORACLE: u64 = 1;
    pub const REPLICAS: u64 = 2;
    pub const BARRIERS: u64 = 3;
}

pub use config::{ExperimentConfig, Kind, Level};
pub use criteria::Criterion;
pub use run::{run_experiment, RunOutcome};
