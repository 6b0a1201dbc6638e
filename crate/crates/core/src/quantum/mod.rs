//! Exact few-qubit simulation: statevectors, density matrices and shot
//! sampling with measurement collapse.
//!
//! Basis index convention: qubit `i` is bit `i` of the index, and bit
//! strings print the highest qubit (or classical slot) first. For the
//! two-qubit neutrino register the label |AB⟩ therefore maps A to qubit 1
//! and B to qubit 0, and basis order is (|00⟩, |01⟩, |10⟩, |11⟩).
//!
//! Global phase is never tracked; compare states with
//! [`StateVector::approx_eq_up_to_phase`].

mod circuit;
mod density;
mod gate;
mod shots;
mod state;

pub use circuit::Circuit;
pub use density::{density_from_state, partial_trace, run_density, DensityMatrix};
pub use gate::{pauli_x_matrix, phase_matrix, u3_matrix, GateOp, Mat2};
pub use shots::{run_shots, run_statevector, shot_rng, CountsHistogram};
pub use state::{apply_gate, StateVector};

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 3;
