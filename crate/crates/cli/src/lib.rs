//! Library behind the `coae` binary: run configuration, the `train`, `sweep`
//! and `verify` commands, and their output files.

pub mod commands;
pub mod config;
pub mod verify;

pub use commands::{cmd_sweep, cmd_train, SweepOptions, SweepOutcome, TrainOutcomeSummary};
pub use config::RunConfig;
pub use verify::{run_verify, Fault, SuiteReport, VerifyReport};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const RUNTIME: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const CONFIG: i32 = 3;
    pub const VERIFY_FAILED: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] coofdm_ae::Error),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Core(_) | CliError::Runtime(_) => exit::RUNTIME,
        }
    }
}

pub(crate) fn write_file(path: &std::path::Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

pub(crate) fn write_json<T: serde::Serialize>(path: &std::path::Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_file(path, text + "\n")
}
