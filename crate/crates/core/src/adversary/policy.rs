use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::network::AgentId;
use crate::quantum::Gate2x2;

/// Behaviour of one malicious agent. Every field only touches the agent's own
/// qubit and its own messages.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaliciousAgentPolicy {
    /// Input 1 to every LogicalOR regardless of the prescribed input.
    pub flip_or_inputs: bool,
    /// Flip the reported outcome in every verification round.
    pub lie_in_verification: bool,
    /// As Verifier, accept whatever the outcomes say.
    pub verifier_always_accepts: bool,
    /// As Verifier, reject whatever the outcomes say.
    pub verifier_always_rejects: bool,
    /// Send Parity shares whose XOR differs from the agent's input.
    pub tamper_parity_shares: bool,
    /// Gates applied to the agent's own qubit before Anonymous Entanglement.
    #[serde(skip)]
    pub pre_entanglement_gates: Vec<Gate2x2>,
}

impl MaliciousAgentPolicy {
    /// A malicious agent that follows the protocol.
    pub fn passive() -> Self {
        Self::default()
    }

    pub fn worst_case_verifier() -> Self {
        MaliciousAgentPolicy { verifier_always_accepts: true, ..Self::default() }
    }
}

/// Points in the protocols where a malicious agent may deviate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Hook {
    OrInput { prescribed: bool },
    ParityShares,
    VerificationReport { measured: bool },
    VerifierDecision { test_passed: bool },
    PreEntanglement,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Action<'a> {
    Input(bool),
    Shares { tamper: bool },
    Report(bool),
    Decide { accept: bool, forced: bool },
    ApplyGates(&'a [Gate2x2]),
}

/// Dispatches `policy` at `hook`.
pub fn apply_malicious_policy<'a>(hook: Hook, policy: &'a MaliciousAgentPolicy) -> Action<'a> {
    match hook {
        Hook::OrInput { prescribed } => Action::Input(prescribed || policy.flip_or_inputs),
        Hook::ParityShares => Action::Shares { tamper: policy.tamper_parity_shares },
        Hook::VerificationReport { measured } => Action::Report(measured ^ policy.lie_in_verification),
        Hook::VerifierDecision { test_passed } => {
            if policy.verifier_always_accepts {
                Action::Decide { accept: true, forced: !test_passed }
            } else if policy.verifier_always_rejects {
                Action::Decide { accept: false, forced: test_passed }
            } else {
                Action::Decide { accept: test_passed, forced: false }
            }
        }
        Hook::PreEntanglement => Action::ApplyGates(&policy.pre_entanglement_gates),
    }
}

/// The set of malicious agents and their policies.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Coalition {
    policies: BTreeMap<usize, MaliciousAgentPolicy>,
}

impl Coalition {
    pub fn honest() -> Self {
        Self::default()
    }

    pub fn new(n: usize, policies: BTreeMap<usize, MaliciousAgentPolicy>) -> Result<Self> {
        if let Some(&bad) = policies.keys().find(|&&a| a == 0 || a > n) {
            return invalid(format!("malicious agent {bad} outside 1..={n}"));
        }
        if policies.len() >= n {
            return invalid("at least one agent must be honest");
        }
        Ok(Coalition { policies })
    }

    /// Every agent in `agents` gets the same policy.
    pub fn uniform(n: usize, agents: impl IntoIterator<Item = usize>, policy: MaliciousAgentPolicy) -> Result<Self> {
        Self::new(n, agents.into_iter().map(|a| (a, policy.clone())).collect())
    }

    pub fn policy(&self, a: AgentId) -> Option<&MaliciousAgentPolicy> {
        self.policies.get(&a.0)
    }

    pub fn is_malicious(&self, a: AgentId) -> bool {
        self.policies.contains_key(&a.0)
    }

    pub fn malicious_set(&self) -> BTreeSet<usize> {
        self.policies.keys().copied().collect()
    }

    pub fn malicious_vec(&self) -> Vec<usize> {
        self.policies.keys().copied().collect()
    }

    pub fn honest_agents(&self, n: usize) -> Vec<AgentId> {
        (1..=n).filter(|a| !self.policies.contains_key(a)).map(AgentId).collect()
    }

    /// Runs the agent's policy at `hook`, or returns `None` for honest agents.
    pub fn act(&self, a: AgentId, hook: Hook) -> Option<Action<'_>> {
        self.policy(a).map(|p| apply_malicious_policy(hook, p))
    }
}
