//! Two-atom, single-mode Jaynes-Cummings simulator.
//!
//! The composite Hilbert space is always ordered `atom A ⊗ atom B ⊗ field`,
//! each atom in the basis `(|e⟩, |g⟩)` and the field in a truncated Fock
//! basis. Time is dimensionless (`λt`) and `ħ = 1`.
//!
//! * [`fock`]: truncated bosonic operator algebra and matrix exponentials.
//! * [`states`]: field (squeezed coherent thermal) and atomic (Bell, Werner) states.
//! * [`hamiltonian`]: the two-atom Hamiltonian with optional Ising, dipole,
//!   Kerr and detuning terms.
//! * [`evolve`]: exact propagation plus closed-form comparators.
//! * [`measures`]: concurrence, negativity, Wigner function, inversion, ESD detection.
//! * [`scenario`]: declarative scenario files, sweeps and CSV output.

// Negated comparisons in this crate are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evolve;
pub mod fock;
pub mod hamiltonian;
pub mod measures;
pub mod scenario;
pub mod states;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
