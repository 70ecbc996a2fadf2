//! Covariant Schrödinger operators `H = Δ(A, g) + φ` on lattice
//! configuration spaces.
//!
//! The crate runs the construction in both directions. [`operators`]
//! assembles Hamiltonians from a metric, a U(1) connection and a scalar
//! potential; [`reconstruct`] recovers all three from nothing but the
//! operator, using the double commutators of position functions with `H`.
//! The remaining modules work out what the recovered data implies:
//! geodesics and the Lorentzian lift ([`geometry`]), the homogeneous Maxwell
//! equations on the spacetime cell complex ([`maxwell`]), flat connections
//! and Aharonov–Bohm spectra ([`holonomy`]) and unitary Heisenberg-picture
//! evolution ([`evolution`]).

pub mod error;
pub mod evolution;
pub mod geometry;
pub mod holonomy;
pub mod lattice;
pub mod linalg;
pub mod maxwell;
pub mod operators;
pub mod reconstruct;

pub use error::{Error, Result};
pub use lattice::{Lattice, LatticeSpec, LinkField, ScalarField, Topology};
pub use operators::{Mass, MetricField, SparseOperator};
