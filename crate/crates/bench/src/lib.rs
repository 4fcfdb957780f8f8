//! Benchmark harness: experiment configuration, seeded replication runners,
//! bootstrap intervals and CSV/JSON reports.

// NaN-rejecting checks are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bootstrap;
pub mod config;
pub mod error;
pub mod experiments;
pub mod report;
pub mod stats;

pub use config::{ExperimentConfig, ExperimentKind, OutputFormat};
pub use error::{BenchError, Result};
pub use experiments::run;
pub use report::{emit_report, BenchRow, Metric};
