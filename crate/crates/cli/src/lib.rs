//! Experiment orchestration and report emission for the `tflab` binary.

pub mod commands;
pub mod config;
pub mod report;

pub use commands::{cmd_compare, cmd_greeks, cmd_hedge_stress, cmd_price, cmd_surface, cmd_var, run};
pub use config::{Command, FdSettings, OutputFormat, Overrides, RunConfig, SpotRange};
pub use report::{format_number, Cell, Report, Table};
