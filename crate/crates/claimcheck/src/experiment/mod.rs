//! Configured pipeline runs: execution, persistence, grids, selection and
//! report tables.

mod config;
mod grid;
mod report;
mod run;
mod select;
mod store;

pub use config::{AugmentStep, ConfigError, ExperimentConfig, ExtraCorpus};
pub use grid::{expand_grid, run_grid, GridCell, GridError, GridSpec};
pub use report::{render_report, ReportError};
pub use run::{run_experiment, RunContext, RunRecord, RunStatus};
pub use select::{select_run, SelectError, SelectMetric, SelectionPolicy, TieBreak};
pub use store::{IndexEntry, RunStore, StoreError};
