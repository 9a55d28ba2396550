//! Exact simulation of quantum-battery charging with Majorana-fermion
//! Hamiltonians.
//!
//! The crate builds charging Hamiltonians (parallel drive, quadratic and
//! sparse SYK couplings, the `(JV)^k` family and the geodesic two-level
//! Hamiltonian) as Pauli-string sums, runs the two-quench charging protocol
//! by exact diagonalization, and extracts disorder-averaged power laws.

pub mod algebra;
pub mod charging;
pub mod ensemble;
pub mod error;
pub mod models;
pub mod scaling;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;
