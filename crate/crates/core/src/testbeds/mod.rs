//! Experiment testbeds: synthetic designs with random replication time and
//! the smoke-detection sensor placement problem.

pub mod smoke;
pub mod synthetic;

pub use smoke::{SmokeSpec, SmokeTestbed, SourceDomain};
pub use synthetic::{SyntheticSpec, TimeModel};
