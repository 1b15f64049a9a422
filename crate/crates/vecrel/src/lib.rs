//! Vector-relation configurations on planar bipartite graphs.
//!
//! A configuration places a vector at every white vertex and a linear
//! relation among the neighbouring vectors at every black vertex. This crate
//! implements the model over exact rationals:
//!
//! - [`exact_linalg`]: rational scalars, matrices, subspaces, projective
//!   points and the multi-ratio.
//! - [`surface_graph`]: bipartite multigraphs embedded in a disk or torus,
//!   with faces, zigzag paths, trip permutations and reducedness.
//! - [`config_core`]: configurations, gauge transformations, Kasteleyn
//!   matrices, face weights, systems and coordinate charts.
//! - [`local_moves`]: urban renewal, degree-two vertex addition and removal,
//!   the classical edge-weight transformation and Y-seed mutation.
//! - [`plabic_positroid`]: matchings, positroids, Grassmann necklaces,
//!   Kasteleyn signs, strand labels and the canonical perfect orientation.
//! - [`boundary_maps`]: boundary restriction, boundary measurement (matching
//!   sums and path sums), the right twist, reconstruction and edge-weight
//!   recovery.
//! - [`dynamics_drivers`]: the pentagram map, Laplace–Darboux dynamics,
//!   Q-nets, discrete Darboux maps and the resistor and Ising reductions,
//!   each run both as a move sequence and as a direct construction.
//! - [`fixtures`]: the standard example graphs used throughout the tests.
//! - [`invariants`]: the seeded suite of exact cross-checks between modules.
//! - [`error`]: the crate-level error type and its exit-code classification.

pub mod boundary_maps;
pub mod config_core;
pub mod dynamics_drivers;
pub mod error;
pub mod exact_linalg;
pub mod fixtures;
pub mod invariants;
pub mod local_moves;
pub mod plabic_positroid;
pub mod surface_graph;

pub use error::{ErrorKind, VecrelError};
pub use exact_linalg::{Matrix, ProjectivePoint, Scalar, Subspace, Vector};
