use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::{Action, Coalition, Hook};
use crate::error::{invalid, Result};
use crate::network::{AgentId, Network};
use crate::quantum::{Gate2x2, StateVector};

/// (|00⟩ + |11⟩)/√2.
pub fn epr_pair() -> StateVector {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let z = Complex64::new(0.0, 0.0);
    StateVector::new(2, vec![h, z, z, h]).expect("normalized")
}

/// Every random choice of one Anonymous Entanglement run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AeBranch {
    /// Outcomes of the intermediate agents, in index order.
    pub outcomes: Vec<bool>,
    pub b: bool,
    pub b_prime: bool,
}

#[derive(Clone, Debug)]
pub struct AnonymousEntanglementResult {
    pub sender: AgentId,
    pub receiver: AgentId,
    /// Intermediate agents and the outcome each broadcast.
    pub broadcasts: Vec<(AgentId, bool)>,
    pub b: bool,
    pub b_prime: bool,
    /// Pair on (Sender, Receiver); the Sender's qubit is the most significant.
    pub pair_state: StateVector,
    /// Probability of the measurement branch that occurred.
    pub branch_probability: f64,
}

impl AnonymousEntanglementResult {
    pub fn branch(&self) -> AeBranch {
        AeBranch { outcomes: self.broadcasts.iter().map(|&(_, m)| m).collect(), b: self.b, b_prime: self.b_prime }
    }
}

fn intermediates(n: usize, sender: AgentId, receiver: AgentId) -> Vec<AgentId> {
    (1..=n).map(AgentId).filter(|&a| a != sender && a != receiver).collect()
}

enum Choices<'a, R: Rng + ?Sized> {
    Sampled(&'a mut R),
    Forced(&'a AeBranch),
}

fn run<R: Rng + ?Sized>(
    net: &mut Network,
    state: &StateVector,
    sender: AgentId,
    receiver: AgentId,
    coalition: &Coalition,
    mut choices: Choices<'_, R>,
) -> Result<AnonymousEntanglementResult> {
    let n = state.num_qubits();
    if net.n() != n {
        return invalid("state size does not match the network");
    }
    net.agent(sender.0)?;
    net.agent(receiver.0)?;
    if sender == receiver {
        return invalid("Sender and Receiver must differ");
    }
    let middle = intermediates(n, sender, receiver);
    if let Choices::Forced(branch) = &choices {
        if branch.outcomes.len() != middle.len() {
            return invalid(format!("{} outcomes for {} intermediates", branch.outcomes.len(), middle.len()));
        }
    }
    let mut psi = state.clone();
    for a in (1..=n).map(AgentId) {
        if let Some(Action::ApplyGates(gates)) = coalition.act(a, Hook::PreEntanglement) {
            for g in gates {
                psi.apply(a.0, g)?;
            }
        }
    }
    let h = Gate2x2::hadamard();
    let mut prob = 1.0;
    let mut broadcasts = Vec::with_capacity(middle.len());
    for (pos, &a) in middle.iter().enumerate() {
        psi.apply(a.0, &h)?;
        let m = match &mut choices {
            Choices::Sampled(rng) => {
                let p1 = psi.prob_one(a.0)?;
                let m = rng.random::<f64>() < p1;
                prob *= psi.collapse(a.0, m)?;
                m
            }
            Choices::Forced(branch) => {
                let m = branch.outcomes[pos];
                let p = psi.collapse(a.0, m)?;
                if p <= 0.0 {
                    return invalid(format!("branch outcome {m} of agent {a} has probability 0"));
                }
                prob *= p;
                m
            }
        };
        net.broadcast(a, &[m])?;
        broadcasts.push((a, m));
    }
    let (b, b_prime) = match &mut choices {
        Choices::Sampled(rng) => (rng.random_bool(0.5), rng.random_bool(0.5)),
        Choices::Forced(branch) => (branch.b, branch.b_prime),
    };
    prob *= 0.25;
    net.broadcast(sender, &[b])?;
    if b {
        psi.apply(sender.0, &Gate2x2::pauli_z())?;
    }
    net.broadcast(receiver, &[b_prime])?;
    let others = broadcasts.iter().fold(b, |acc, &(_, m)| acc ^ m);
    if others {
        psi.apply(receiver.0, &Gate2x2::pauli_z())?;
    }
    let fixed: Vec<(usize, bool)> = broadcasts.iter().map(|&(a, m)| (a.0, m)).collect();
    let pair_state = psi.slice(&[sender.0, receiver.0], &fixed)?;
    Ok(AnonymousEntanglementResult { sender, receiver, broadcasts, b, b_prime, pair_state, branch_probability: prob })
}

/// Anonymous Entanglement on a GHZ-frame state: intermediates measure in the
/// Hadamard basis and broadcast, then the Sender and the Receiver broadcast
/// their random bits and apply their σz corrections. The Receiver's
/// correction uses the parity of every other broadcast bit, b included.
pub fn anonymous_entanglement<R: Rng + ?Sized>(
    net: &mut Network,
    state: &StateVector,
    sender: AgentId,
    receiver: AgentId,
    coalition: &Coalition,
    rng: &mut R,
) -> Result<AnonymousEntanglementResult> {
    run(net, state, sender, receiver, coalition, Choices::Sampled(rng))
}

/// Same protocol along a fixed branch; errors on a branch of probability 0.
pub fn anonymous_entanglement_branch(
    net: &mut Network,
    state: &StateVector,
    sender: AgentId,
    receiver: AgentId,
    coalition: &Coalition,
    branch: &AeBranch,
) -> Result<AnonymousEntanglementResult> {
    run::<rand_chacha::ChaCha8Rng>(net, state, sender, receiver, coalition, Choices::Forced(branch))
}

/// Every branch of an n-agent run: 2^(n−2) intermediate outcomes times b, b′.
pub fn all_branches(n: usize) -> Vec<AeBranch> {
    let m = n.saturating_sub(2);
    (0..1usize << m)
        .flat_map(|bits| {
            let outcomes: Vec<bool> = (0..m).map(|i| (bits >> (m - 1 - i)) & 1 == 1).collect();
            [(false, false), (false, true), (true, false), (true, true)]
                .into_iter()
                .map(move |(b, b_prime)| AeBranch { outcomes: outcomes.clone(), b, b_prime })
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct TeleportResult {
    pub output: StateVector,
    /// (m₁, m₂): outcomes on the message qubit and on the Sender's half.
    pub corrections: (bool, bool),
    pub branch_probability: f64,
}

fn teleport_inner<R: Rng + ?Sized>(
    message: &StateVector,
    pair: &StateVector,
    forced: Option<(bool, bool)>,
    rng: &mut R,
) -> Result<TeleportResult> {
    if message.num_qubits() != 1 || pair.num_qubits() != 2 {
        return invalid("teleport takes a 1-qubit message and a 2-qubit pair");
    }
    let mut psi = message.tensor(pair)?;
    psi.apply_controlled(1, 2, &Gate2x2::pauli_x())?;
    psi.apply(1, &Gate2x2::hadamard())?;
    let mut prob = 1.0;
    let mut outcome = |psi: &mut StateVector, q: usize, want: Option<bool>| -> Result<bool> {
        let m = match want {
            Some(m) => m,
            None => rng.random::<f64>() < psi.prob_one(q)?,
        };
        let p = psi.collapse(q, m)?;
        if p <= 0.0 {
            return invalid(format!("teleport outcome {m} on qubit {q} has probability 0"));
        }
        prob *= p;
        Ok(m)
    };
    let m1 = outcome(&mut psi, 1, forced.map(|f| f.0))?;
    let m2 = outcome(&mut psi, 2, forced.map(|f| f.1))?;
    if m2 {
        psi.apply(3, &Gate2x2::pauli_x())?;
    }
    if m1 {
        psi.apply(3, &Gate2x2::pauli_z())?;
    }
    let output = psi.slice(&[3], &[(1, m1), (2, m2)])?;
    Ok(TeleportResult { output, corrections: (m1, m2), branch_probability: prob })
}

/// Teleports `message` over `pair`: Bell measurement on (message, first half),
/// then X^m₂ and Z^m₁ on the second half. The two correction bits travel over
/// an abstract reliable channel.
pub fn teleport<R: Rng + ?Sized>(message: &StateVector, pair: &StateVector, rng: &mut R) -> Result<TeleportResult> {
    teleport_inner(message, pair, None, rng)
}

/// Teleportation along fixed Bell-measurement outcomes.
pub fn teleport_branch(message: &StateVector, pair: &StateVector, m1: bool, m2: bool) -> Result<TeleportResult> {
    teleport_inner::<rand_chacha::ChaCha8Rng>(message, pair, Some((m1, m2)), &mut crate::rng::seeded(0))
}
