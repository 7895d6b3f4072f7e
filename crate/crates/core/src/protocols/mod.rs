//! Quantum subprotocols: GHZ verification, Anonymous Entanglement and
//! teleportation over the resulting pair.
//!
//! Verification takes its state in the Φ₀ frame; Anonymous Entanglement takes
//! it in the GHZ frame.

mod entanglement;
mod verification;

pub use entanglement::{
    all_branches, anonymous_entanglement, anonymous_entanglement_branch, epr_pair, teleport, teleport_branch,
    AeBranch, AnonymousEntanglementResult, TeleportResult,
};
pub use verification::{
    angles_from_draws, estimate_pass_probability, sample_angles, verification_round, verify_with_angles,
    AngleAssignment, PassEstimate, VerificationResult, ANGLE_TOL,
};
