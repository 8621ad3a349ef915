//! Experiment driver: configuration, the `run`/`exact`/`sweep` commands and
//! the `verify` property suite behind the `hybridtn` binary.

pub mod commands;
pub mod config;
pub mod verify;

pub use commands::{cmd_exact, cmd_run, cmd_sweep, ExactRecord, RunRecord, SweepSummary};
pub use config::{ExperimentConfig, Lambda, CONFIG_VERSION};

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    /// Runtime failure, I/O error or a failed `verify` property.
    pub const FAILURE: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const ORACLE_LIMIT: i32 = 3;
    /// The optimizer hit `max_iters`; results are still written.
    pub const NOT_CONVERGED: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("oracle limit: {0}")]
    OracleLimit(String),
    #[error("{0}")]
    Runtime(#[from] hybrid_tn::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{failed} of {total} properties failed")]
    VerifyFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::OracleLimit(_) => exit::ORACLE_LIMIT,
            _ => exit::FAILURE,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
