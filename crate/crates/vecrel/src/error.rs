//! Crate-level error type and its classification.
//!
//! Each module has its own error enum; [`VecrelError`] wraps them all and
//! sorts every failure into one of three kinds: invalid input, degenerate
//! (non-generic) input, or a failed internal consistency check.

use thiserror::Error;

use crate::boundary_maps::BoundaryError;
use crate::config_core::ConfigError;
use crate::dynamics_drivers::DynamicsError;
use crate::exact_linalg::LinalgError;
use crate::local_moves::MoveError;
use crate::plabic_positroid::PlabicError;
use crate::surface_graph::GraphError;

/// Coarse classification of a failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ErrorKind {
    /// The input is malformed or violates a precondition.
    Validation,
    /// The input is well formed but not generic enough for the operation.
    Degenerate,
    /// An internal consistency check failed.
    Internal,
}

impl ErrorKind {
    /// Process exit code: 2, 3 or 4.
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Validation => 2,
            ErrorKind::Degenerate => 3,
            ErrorKind::Internal => 4,
        }
    }

    /// Stable lower-case name.
    pub fn name(self) -> &'static str {
        match self {
            ErrorKind::Validation => "validation",
            ErrorKind::Degenerate => "degenerate",
            ErrorKind::Internal => "internal",
        }
    }
}

/// Any error raised by the crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VecrelError {
    /// Linear algebra failure.
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    /// Graph failure.
    #[error(transparent)]
    Graph(#[from] GraphError),
    /// Configuration failure.
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// Local move failure.
    #[error(transparent)]
    Move(#[from] MoveError),
    /// Plabic graph failure.
    #[error(transparent)]
    Plabic(#[from] PlabicError),
    /// Boundary map failure.
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    /// Dynamics failure.
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    /// A failed consistency check outside the library modules.
    #[error("internal check failed: {0}")]
    Check(String),
}

fn linalg_kind(e: &LinalgError) -> ErrorKind {
    match e {
        LinalgError::Singular
        | LinalgError::ZeroVector
        | LinalgError::DegenerateDenominator { .. }
        | LinalgError::NotAPoint { .. } => ErrorKind::Degenerate,
        _ => ErrorKind::Validation,
    }
}

fn graph_kind(e: &GraphError) -> ErrorKind {
    match e {
        GraphError::Unknown(_) => ErrorKind::Internal,
        _ => ErrorKind::Validation,
    }
}

fn config_kind(e: &ConfigError) -> ErrorKind {
    match e {
        ConfigError::Linalg(e) => linalg_kind(e),
        ConfigError::Graph(e) => graph_kind(e),
        ConfigError::ZeroDenominator { .. }
        | ConfigError::ZeroNumerator { .. }
        | ConfigError::ZeroSystemCoefficient { .. }
        | ConfigError::NoBasis => ErrorKind::Degenerate,
        _ => ErrorKind::Validation,
    }
}

fn move_kind(e: &MoveError) -> ErrorKind {
    match e {
        MoveError::Config(e) => config_kind(e),
        MoveError::Graph(e) => graph_kind(e),
        MoveError::Singular { .. }
        | MoveError::VanishingDenominator
        | MoveError::DegenerateMutation { .. }
        | MoveError::ZeroNewVector => ErrorKind::Degenerate,
        MoveError::Unknown(_) => ErrorKind::Internal,
        _ => ErrorKind::Validation,
    }
}

fn plabic_kind(e: &PlabicError) -> ErrorKind {
    match e {
        PlabicError::Linalg(e) => linalg_kind(e),
        PlabicError::MatchingCap { .. } => ErrorKind::Internal,
        _ => ErrorKind::Validation,
    }
}

fn boundary_kind(e: &BoundaryError) -> ErrorKind {
    match e {
        BoundaryError::Plabic(e) => plabic_kind(e),
        BoundaryError::Config(e) => config_kind(e),
        BoundaryError::Linalg(e) => linalg_kind(e),
        BoundaryError::NecklaceMinorVanishes { .. }
        | BoundaryError::OutsideOpenPositroid
        | BoundaryError::NotInTG { .. }
        | BoundaryError::LineDegenerate { .. }
        | BoundaryError::NotACircuit { .. }
        | BoundaryError::NoMatchings => ErrorKind::Degenerate,
        _ => ErrorKind::Validation,
    }
}

fn dynamics_kind(e: &DynamicsError) -> ErrorKind {
    match e {
        DynamicsError::Move(e) => move_kind(e),
        DynamicsError::Config(e) => config_kind(e),
        DynamicsError::Linalg(e) => linalg_kind(e),
        DynamicsError::Graph(e) => graph_kind(e),
        DynamicsError::Degenerate(_) | DynamicsError::PlanesNotGeneral | DynamicsError::NotACircuit(_) => {
            ErrorKind::Degenerate
        }
        DynamicsError::Sequence(_) | DynamicsError::Mismatch(_) => ErrorKind::Internal,
        _ => ErrorKind::Validation,
    }
}

impl VecrelError {
    /// Classification of this error.
    pub fn kind(&self) -> ErrorKind {
        match self {
            VecrelError::Linalg(e) => linalg_kind(e),
            VecrelError::Graph(e) => graph_kind(e),
            VecrelError::Config(e) => config_kind(e),
            VecrelError::Move(e) => move_kind(e),
            VecrelError::Plabic(e) => plabic_kind(e),
            VecrelError::Boundary(e) => boundary_kind(e),
            VecrelError::Dynamics(e) => dynamics_kind(e),
            VecrelError::Check(_) => ErrorKind::Internal,
        }
    }

    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        self.kind().exit_code()
    }

    /// Name of the module the error came from.
    pub fn module(&self) -> &'static str {
        match self {
            VecrelError::Linalg(_) => "exact_linalg",
            VecrelError::Graph(_) => "surface_graph",
            VecrelError::Config(_) => "config_core",
            VecrelError::Move(_) => "local_moves",
            VecrelError::Plabic(_) => "plabic_positroid",
            VecrelError::Boundary(_) => "boundary_maps",
            VecrelError::Dynamics(_) => "dynamics_drivers",
            VecrelError::Check(_) => "check",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_and_exit_codes() {
        let e: VecrelError = LinalgError::Singular.into();
        assert_eq!(e.kind(), ErrorKind::Degenerate);
        assert_eq!(e.exit_code(), 3);
        let e: VecrelError = GraphError::NotDisk.into();
        assert_eq!(e.exit_code(), 2);
        let e: VecrelError = DynamicsError::TooSmall { n: 4 }.into();
        assert_eq!(e.kind(), ErrorKind::Validation);
        let e: VecrelError = DynamicsError::Move(MoveError::DegenerateMutation { face: 1 }).into();
        assert_eq!(e.kind(), ErrorKind::Degenerate);
        let e = VecrelError::Check("x".into());
        assert_eq!(e.exit_code(), 4);
        assert_eq!(e.module(), "check");
    }
}
