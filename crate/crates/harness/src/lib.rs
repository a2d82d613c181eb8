//! Experiment harness for `skpk-core`: PMF files, trial campaigns, exact
//! evaluation, reports and the `skpk` command line.

pub mod campaign;
pub mod cli;
pub mod error;
pub mod pmf;
pub mod report;

pub use error::{HarnessError, Result};
