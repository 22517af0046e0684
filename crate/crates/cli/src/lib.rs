//! Experiment runner for GS content switching: configuration, synthetic
//! traces, Monte Carlo sweeps and result files.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(a > b)` deliberately rejects NaN.

pub mod error;
pub mod experiment;
pub mod metrics;
pub mod report;
pub mod solvers;
pub mod spec;
pub mod synth;

pub use error::{CliError, Result};
pub use experiment::{run_experiment, ExperimentResults, MetricsRow, QoeRow};
pub use report::emit_report;
pub use solvers::SolverId;
pub use spec::ExperimentSpec;
