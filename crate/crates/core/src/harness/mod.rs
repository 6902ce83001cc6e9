//! Configuration files, trajectory runs and CSV output.

pub mod config;
pub mod driver;
pub mod output;

pub use config::{RunConfig, OUT_DIR_ENV};
pub use driver::{compare, convergence, drive, fit_slope, run, run_to, trajectory, ConvergenceTable, RunSummary};
pub use output::Table;
