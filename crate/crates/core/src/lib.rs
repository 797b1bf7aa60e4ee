//! Optimal computing budget allocation when each simulation replication
//! takes a random, integer amount of time.
//!
//! The crate is `no_std` and only needs `alloc`. It contains:
//!
//! - [`stats`]: designs, observations, running statistics and the
//!   [`Simulator`] contract.
//! - [`renewal`]: exact distribution of the number of replications that fit
//!   into a time budget, and the resulting posterior CDF of a design mean.
//! - [`allocation`]: equal allocation, classic OCBA, the time-based OCBAS
//!   rule and the sequential driver.
//! - [`testbeds`]: synthetic designs with random replication time and the
//!   smoke-detection sensor placement simulator.
//!
//! IO, parallel experiment orchestration and the command line live in the
//! `ocbas` companion crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod allocation;
mod error;
pub mod normal;
pub mod renewal;
pub mod stats;
pub mod testbeds;

pub use allocation::{
    allocate_equal, allocate_ocba_classic, allocate_theorem2, apcs, run_sequential,
    selection_error_bound, AllocationInputs, Policy, PolicyConfig, SelectionReport,
};
pub use error::Error;
pub use renewal::{DiscretePmf, PosteriorSpec};
pub use stats::{
    select_observed_best, AllocationVector, DesignId, DesignStats, Observation, ProblemSpec,
    Simulator,
};

pub type Result<T, E = Error> = core::result::Result<T, E>;
