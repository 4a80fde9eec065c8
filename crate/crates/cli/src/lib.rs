//! Configuration ingestion, experiment entry points and output files for the
//! `echoloop` command-line tool.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod output;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or input file.
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("runtime failure: {0}")]
    Runtime(String),
    /// Some grid cells failed; the rest were written.
    #[error("{} grid cell(s) failed:\n{}", .0.len(), .0.join("\n"))]
    PartialGrid(Vec<String>),
    /// `report --strict` found cells above their ceiling.
    #[error("{0} cell(s) exceed their bound")]
    BoundViolated(usize),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Runtime(_) | CliError::BoundViolated(_) => 1,
            CliError::PartialGrid(_) => 3,
        }
    }
}
