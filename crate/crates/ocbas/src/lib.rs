//! Experiment harness for stochastic-time budget allocation: reproducible
//! macro-replication PCS experiments, smoke-detection tables and CSV output.
//! The `ocbas` binary wraps it as a command line tool.

pub mod cli;
mod error;
pub mod harness;
pub mod output;
pub mod seed;
pub mod testbed;

pub use error::HarnessError;
pub use harness::{
    empirical_pmf, estimate_smoke_table, run_pcs_experiment, CellFailure, ExperimentPlan,
    ExperimentResult, PcsRow, PolicySetup,
};
pub use testbed::Testbed;
