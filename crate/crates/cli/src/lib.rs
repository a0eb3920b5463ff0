//! Configuration, experiment registry and result persistence for the `convolve` binary.

pub mod config;
pub mod experiments;
pub mod output;
pub mod plot;
pub mod registry;
pub mod runner;

pub use config::{ExperimentSpec, Group};
pub use experiments::{Outcome, RunContext};
pub use registry::{Experiment, Registry};
pub use runner::{execute, RunResult};
