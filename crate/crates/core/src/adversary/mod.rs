//! Malicious sources, malicious agent policies and Sender-identification attacks.

mod discrimination;
mod policy;
mod source;

pub use discrimination::{
    build_sender_ensemble, helstrom_guess_prob, pgm_guess_prob, pretty_good_measurement, DiscriminationEnsemble,
    SUPPORT_TOL,
};
pub use policy::{apply_malicious_policy, Action, Coalition, Hook, MaliciousAgentPolicy};
pub use source::{craft_state_with_fprime, craft_state_with_fprime_random, SourceStrategy, CRAFT_TOL};
