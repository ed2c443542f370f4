//! Matrix product operators for the benchmark Hamiltonians.
//!
//! Two halves: [`fit`] compresses power-law couplings `r^{-alpha}` into
//! sums of decaying exponentials (the only distance dependence a
//! finite-state MPO can carry), and [`model`] assembles the transfer-
//! automaton MPO for each Hamiltonian family from such a fit, along with
//! dense materialization and energy measurement used by the oracles.

pub mod fit;
pub mod model;

pub use fit::{fit_exponentials, fit_sequence, ExpSumFit};
pub use model::{
    build_mpo, expectation, mpo_to_dense, pauli_id, pauli_x, pauli_y, pauli_z, ModelKind,
    ModelSpec, Mpo, MpoTensor,
};
