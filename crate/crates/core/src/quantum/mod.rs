//! Dense state-vector simulation of the protocol's shared state.

mod gate;
pub mod random;
mod state;
mod subsystem;

pub use gate::Gate2x2;
pub use state::{
    fidelity, hamming_class, make_ghz, make_phi, phi_to_ghz_gate, trace_distance_pure,
    StateVector, MAX_QUBITS, NORM_TOL,
};
pub use subsystem::{
    apply_subsystem_unitary, checked_hermitian_eigen, checked_svd, decompose_honest, fprime, Bipartition, DecompositionResult,
    FidelityReport,
};
