//! Experiment harness for shuffled private gradient methods: calibration,
//! single runs and the multi-seed learning-rate grid.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
mod error;
pub mod experiment;
pub mod grid;

pub use config::{default_eta_grid, DataSource, ExperimentConfig, RegularizerChoice};
pub use error::{BenchError, EXIT_CONFIG, EXIT_DIVERGENCE, EXIT_IO, EXIT_OK};
pub use experiment::{calibrate, load_data, write_trajectory_csv, Calibration, Prepared, RunRecord, CODE_VERSION};
pub use grid::{run_grid, select_winner, write_grid, CellSummary, Execution, GridResult, ScheduleSummary, SeriesPoint};
