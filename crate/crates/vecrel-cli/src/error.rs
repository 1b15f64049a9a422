//! Structured command-line errors.

use serde::Serialize;
use thiserror::Error;
use vecrel::{ErrorKind, VecrelError};

/// A failure reported as `{code, message, context}` on standard error.
#[derive(Debug, Error)]
#[error("{message}")]
pub struct CliError {
    /// Classification, which fixes the exit code.
    pub kind: ErrorKind,
    /// Human-readable message.
    pub message: String,
    /// Module the failure came from, or `"cli"`.
    pub module: &'static str,
    /// Input file involved, if any.
    pub file: Option<String>,
}

/// JSON form of a [`CliError`].
#[derive(Serialize)]
pub struct ErrorReport<'a> {
    /// Exit code.
    pub code: i32,
    /// Message.
    pub message: &'a str,
    /// Where the error happened.
    pub context: ErrorContext<'a>,
}

/// Context of an [`ErrorReport`].
#[derive(Serialize)]
pub struct ErrorContext<'a> {
    /// Subcommand name.
    pub command: &'a str,
    /// Error kind name.
    pub kind: &'static str,
    /// Source module.
    pub module: &'static str,
    /// Input file, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<&'a str>,
}

impl CliError {
    /// Invalid input not tied to a library module.
    pub fn validation(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Validation, message: message.into(), module: "cli", file: None }
    }

    /// A failed internal consistency check.
    pub fn internal(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Internal, message: message.into(), module: "cli", file: None }
    }

    /// Attaches the input file name.
    pub fn in_file(mut self, file: &str) -> Self {
        self.file.get_or_insert_with(|| file.to_string());
        self
    }

    /// Process exit code.
    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }

    /// The JSON report for this error.
    pub fn report<'a>(&'a self, command: &'a str) -> ErrorReport<'a> {
        ErrorReport {
            code: self.exit_code(),
            message: &self.message,
            context: ErrorContext { command, kind: self.kind.name(), module: self.module, file: self.file.as_deref() },
        }
    }
}

impl From<VecrelError> for CliError {
    fn from(e: VecrelError) -> Self {
        CliError { kind: e.kind(), message: e.to_string(), module: e.module(), file: None }
    }
}

macro_rules! from_module_error {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                VecrelError::from(e).into()
            }
        })*
    };
}

from_module_error!(
    vecrel::exact_linalg::LinalgError,
    vecrel::surface_graph::GraphError,
    vecrel::config_core::ConfigError,
    vecrel::local_moves::MoveError,
    vecrel::plabic_positroid::PlabicError,
    vecrel::boundary_maps::BoundaryError,
    vecrel::dynamics_drivers::DynamicsError
);

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::validation(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::validation(format!("malformed JSON: {e}"))
    }
}
