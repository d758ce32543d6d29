//! Library backing the `maxcond` binary: run configuration, file formats,
//! command implementations and the validation suite.

// `!(x > 0)`-style checks are deliberate: they reject NaN along with the
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;
pub mod validate;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] maxcond_core::CoreError),

    #[error(transparent)]
    Kernel(#[from] maxcond_kernels::KernelError),

    #[error(transparent)]
    Oracle(#[from] maxcond_oracle::OracleError),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit code: 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Core(maxcond_core::CoreError::Spec(_)) => 2,
            _ => 1,
        }
    }
}
