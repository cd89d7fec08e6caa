//! Library half of the `sketchproj` binary: configuration parsing, experiment
//! execution and CSV reporting.

pub mod config;
pub mod run;

pub use config::{parse_config_str, Cli, CommandKind, ExperimentConfig, Flags};
pub use run::{exit_code, run, RunOutcome};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] sketchproj::Error),
    #[error("{0}")]
    Usage(String),
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
