//! Batch front end: configuration, the full pipeline, reports and sweeps.

pub mod config;
pub mod pipeline;
pub mod report;
pub mod sweep;

pub use config::{DataSpec, RunConfig, Slot, Target};
pub use pipeline::{run, run_until, RunOutcome, Stage};
pub use report::Report;
pub use sweep::{sweep, Axis, SweepRow};
