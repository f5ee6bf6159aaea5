//! Simulation and analysis toolkit for superspin Ising annealing studies.
//!
//! The crate covers the full numerical pipeline around 3x3 square-lattice
//! superspin Hamiltonians:
//!
//! - [`lattice`]: signed instances, dihedral x gauge canonicalization, class
//!   enumeration, and superspin embeddings onto Chimera unit cells.
//! - [`ed`]: exact diagonalization of small transverse-field Ising problems
//!   and thermal magnetization grids over temperature and transverse field.
//! - [`transitions`]: spin-sign transition tracing and the Type 0/I/II/III
//!   spin classification.
//! - [`dynamics`]: Kibble-Zurek freeze-time estimation on the
//!   permutation-symmetric K(4) reduction of the truncated-cell system.
//! - [`sampler`]: synthetic annealer sample generators (frozen-state,
//!   Metropolis, spin-vector rotor) with gauge/dihedral frame randomization.
//! - [`analysis`]: defect-rate counting and frozen-spin disagreement maps.

pub mod analysis;
pub mod dynamics;
pub mod ed;
pub mod lattice;
pub mod sampler;
pub mod transitions;

pub use lattice::{CellMode, ChimeraIsing, SquareLatticeInstance, SymmetryElement};

/// Crate version embedded in every output artifact.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
