//! Decomposition of 2×2 block matrices by complementary invariant graph
//! subspaces.
//!
//! A block matrix `B = A + V` on `H = H0 ⊕ H1` with diagonal part
//! `A = diag(A0, A1)` and off-diagonal part `V = [[0, W1], [W0, 0]]` is
//! block diagonalized by a pair of angular operators `X0: H0 → H1`,
//! `X1: H1 → H0` whose graphs are invariant for `B`. The crate extracts
//! such pairs from spectral data, solves the associated Riccati equations
//! independently by Newton's method, and verifies the resulting
//! similarity transforms, spectral identities and resolvent criteria.
//!
//! Everything works on dense complex matrices at desk scale.

pub mod angular;
pub mod block;
pub mod commands;
pub mod criteria;
pub mod dirac;
mod error;
pub mod fixtures;
pub mod io;
pub mod riccati;
pub mod route;
mod schur;
pub mod spectral;
pub mod subordinated;
pub mod transform;

pub use angular::{AngularPair, Base, GraphSubspace};
pub use block::{operator_norm, BlockMatrix, DenseMatrix, SignatureJ};
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use spectral::{Spectrum, Subspace};

/// Default relative tolerance used when callers pass none.
pub const DEFAULT_TOL: f64 = 1e-10;
