//! Harness library behind the `tvopt` binary: flat key=value configuration,
//! CSV emission/parsing, and the experiment drivers for the run, sweep,
//! lower-bound, and certify-network subcommands.

pub mod commands;
pub mod config;
pub mod csvio;

pub use commands::{
    build_setup, certify_network, fit_loglog_slope, lower_bound, run, sweep, HarnessError,
    RunOutput, SweepOutput,
};
pub use config::{Config, ConfigError};
