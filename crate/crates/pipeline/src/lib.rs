//! Configuration, file output and the figure subcommands behind the `fano`
//! binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;

pub use commands::{run_command, Command, RunReport};
pub use config::{parse_config, ConfigError, RunConfig};
