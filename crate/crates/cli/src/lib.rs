//! Library surface of the experiment driver: configuration parsing and
//! the run/list operations, reused by the `ens` binary and its tests.

pub mod config;
pub mod runner;

use thiserror::Error;

#[derive(Error, Debug)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn runtime<E: std::fmt::Display>(e: E) -> Self {
        CliError::Runtime(e.to_string())
    }
}
