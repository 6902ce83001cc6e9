//! Variational Gaussian wave packets under magnetic Schrödinger Hamiltonians.
//!
//! A packet `(q, p, Q, P, S)` is flattened into canonical coordinates
//! `(qB, pB)` in which its variational dynamics is a classical Hamiltonian
//! system with averaged potentials. The integrators in [`integrators`]
//! preserve the symplectic structure of that system exactly.

pub mod averaging;
pub mod error;
pub mod fields;
pub mod harness;
pub mod integrators;
pub mod invariants;
pub mod packet;

pub use error::{Error, Result};
