//! ε-Anonymous Entanglement Distribution: Notification, then rounds of state
//! generation, RandomBit, and either Verification or Anonymous Entanglement.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use crate::adversary::{Coalition, MaliciousAgentPolicy, SourceStrategy};
use crate::classical::{notification, random_agent, random_bit, OrConfig, RandomBitDistribution};
use crate::error::{invalid, Result};
use crate::network::{AgentId, Network, Transcript};
use crate::protocols::{anonymous_entanglement, epr_pair, verification_round, AnonymousEntanglementResult};
use crate::quantum::{fidelity, fprime, MAX_QUBITS};
use crate::rng::{seeded, SimRng};

/// Slack on the C_ε threshold √(1−ε²).
pub const C_EPSILON_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub n: usize,
    /// Honest agents; everyone else is malicious.
    pub honest: Vec<usize>,
    pub s: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
    pub source: SourceStrategy,
    /// Policy of every malicious agent not listed in `policies`.
    pub malicious_policy: MaliciousAgentPolicy,
    pub policies: BTreeMap<usize, MaliciousAgentPolicy>,
    /// Pinned Sender; drawn uniformly from the honest agents when `None`.
    pub sender: Option<usize>,
    /// Pinned Receiver; drawn uniformly from the other agents when `None`.
    pub receiver: Option<usize>,
    pub or_config: OrConfig,
    pub max_rounds: usize,
    pub record_transcript: bool,
}

impl ProtocolConfig {
    /// All agents honest, honest source.
    pub fn honest(n: usize, s: usize, epsilon: f64, delta: f64, seed: u64) -> Self {
        ProtocolConfig {
            n,
            honest: (1..=n).collect(),
            s,
            epsilon,
            delta,
            seed,
            source: SourceStrategy::Honest,
            malicious_policy: MaliciousAgentPolicy::passive(),
            policies: BTreeMap::new(),
            sender: None,
            receiver: None,
            or_config: OrConfig::default(),
            max_rounds: 1_000_000,
            record_transcript: false,
        }
    }

    pub fn k(&self) -> usize {
        self.honest.len()
    }

    pub fn malicious(&self) -> Vec<usize> {
        (1..=self.n).filter(|a| !self.honest.contains(a)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=MAX_QUBITS).contains(&self.n) {
            return invalid(format!("n = {} outside 2..={MAX_QUBITS}", self.n));
        }
        let mut honest = self.honest.clone();
        honest.sort_unstable();
        honest.dedup();
        if honest.len() != self.honest.len() || honest.iter().any(|&a| a == 0 || a > self.n) {
            return invalid("honest set must list distinct agents in 1..=n");
        }
        if honest.is_empty() {
            return invalid("at least one honest agent is required");
        }
        if self.s == 0 {
            return invalid("S must be at least 1");
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return invalid(format!("epsilon {} outside (0, 1)", self.epsilon));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return invalid(format!("delta {} outside (0, 1)", self.delta));
        }
        self.source.validate()?;
        if let Some(&a) = self.policies.keys().find(|a| self.honest.contains(a) || **a == 0 || **a > self.n) {
            return invalid(format!("policy given for agent {a}, which is not malicious"));
        }
        if let Some(s) = self.sender {
            if !self.honest.contains(&s) {
                return invalid(format!("Sender {s} must be honest"));
            }
        }
        if let Some(r) = self.receiver {
            if r == 0 || r > self.n {
                return invalid(format!("Receiver {r} outside 1..={}", self.n));
            }
            if Some(r) == self.sender {
                return invalid("Sender and Receiver must differ");
            }
        }
        if self.max_rounds == 0 {
            return invalid("max_rounds must be at least 1");
        }
        Ok(())
    }

    pub fn coalition(&self) -> Result<Coalition> {
        let policies = self
            .malicious()
            .into_iter()
            .map(|a| (a, self.policies.get(&a).cloned().unwrap_or_else(|| self.malicious_policy.clone())))
            .collect();
        Coalition::new(self.n, policies)
    }

    /// √(1−ε²), the C_ε threshold on F′.
    pub fn fprime_threshold(&self) -> f64 {
        (1.0 - self.epsilon * self.epsilon).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Use,
    Verify,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbortReason {
    /// An honest verdict rejected the state.
    VerificationFailed,
    /// A public RandomBit or RandomAgent outcome differed from the Sender's input.
    SenderConsistency,
    /// A malicious Verifier rejected a state that passed.
    PolicyTriggered,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub round: usize,
    pub branch: Branch,
    pub verifier: Option<AgentId>,
    pub pass: Option<bool>,
    pub aborted: bool,
    pub abort: Option<AbortReason>,
    pub used_state_fprime: Option<f64>,
    pub c_epsilon: bool,
}

impl RoundOutcome {
    fn new(round: usize, branch: Branch) -> Self {
        RoundOutcome {
            round,
            branch,
            verifier: None,
            pass: None,
            aborted: false,
            abort: None,
            used_state_fprime: None,
            c_epsilon: false,
        }
    }

    fn abort(mut self, reason: AbortReason) -> Self {
        self.aborted = true;
        self.abort = Some(reason);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "reason")]
pub enum Termination {
    Established,
    Aborted(AbortReason),
    /// Notification never reached the Receiver, so no pair can be set up.
    ReceiverMissed,
    RoundLimit,
}

#[derive(Clone, Debug)]
pub struct ProtocolRun {
    pub sender: AgentId,
    pub receiver: AgentId,
    /// Agents other than the Receiver who also obtained yᵢ = 1.
    pub spurious_receivers: Vec<AgentId>,
    pub rounds: Vec<RoundOutcome>,
    pub termination: Termination,
    pub entanglement: Option<AnonymousEntanglementResult>,
    /// Fidelity of the final pair with (|00⟩ + |11⟩)/√2.
    pub pair_fidelity: Option<f64>,
    pub transcript: Option<Transcript>,
}

impl ProtocolRun {
    pub fn c_epsilon(&self) -> bool {
        self.rounds.last().is_some_and(|r| r.c_epsilon)
    }

    pub fn verification_rounds(&self) -> usize {
        self.rounds.iter().filter(|r| r.branch == Branch::Verify).count()
    }
}

/// Runs one execution with the stream seeded from `config.seed`.
pub fn run_protocol5(config: &ProtocolConfig) -> Result<ProtocolRun> {
    run_protocol5_with(config, &mut seeded(config.seed))
}

/// Runs one execution drawing all randomness from `rng`.
pub fn run_protocol5_with(config: &ProtocolConfig, rng: &mut SimRng) -> Result<ProtocolRun> {
    config.validate()?;
    let n = config.n;
    let coalition = config.coalition()?;
    let malicious = coalition.malicious_vec();
    let mut net = Network::new(n, &coalition.malicious_set(), config.record_transcript)?;

    let sender = match config.sender {
        Some(s) => AgentId(s),
        None => AgentId(*config.honest.choose(rng).expect("non-empty honest set")),
    };
    let receiver = match config.receiver {
        Some(r) => AgentId(r),
        None => {
            let others: Vec<usize> = (1..=n).filter(|&a| a != sender.0).collect();
            AgentId(*others.choose(rng).expect("n ≥ 2"))
        }
    };

    net.mark_phase("notification");
    let note = notification(&mut net, sender, receiver, config.s, &coalition, rng)?;
    let spurious_receivers = note.receivers().into_iter().filter(|&a| a != receiver).collect();
    let finish = |net: Network, rounds, termination, entanglement: Option<AnonymousEntanglementResult>| {
        let pair_fidelity = entanglement.as_ref().map(|e| fidelity(&e.pair_state, &epr_pair()).unwrap_or(0.0));
        ProtocolRun {
            sender,
            receiver,
            spurious_receivers,
            rounds,
            termination,
            entanglement,
            pair_fidelity,
            transcript: config.record_transcript.then(|| net.into_transcript()),
        }
    };
    if !note.y[receiver.0 - 1] {
        return Ok(finish(net, Vec::new(), Termination::ReceiverMissed, None));
    }

    let threshold = config.fprime_threshold();
    let coin = RandomBitDistribution::all_heads(config.s);
    let mut rounds = Vec::new();
    for round in 1..=config.max_rounds {
        net.mark_phase(format!("round {round}: state"));
        let state = config.source.emit(n, &malicious, rng)?;

        net.mark_phase(format!("round {round}: random bit"));
        let bit = random_bit(&mut net, sender, coin, config.s, config.or_config, &coalition, rng)?;
        let branch = if bit.output { Branch::Verify } else { Branch::Use };
        let outcome = RoundOutcome::new(round, branch);
        if !bit.consistent() {
            rounds.push(outcome.abort(AbortReason::SenderConsistency));
            return Ok(finish(net, rounds, Termination::Aborted(AbortReason::SenderConsistency), None));
        }

        if branch == Branch::Use {
            let mut phi_frame = state.clone();
            phi_frame.ghz_to_phi_frame();
            let f = fprime(&phi_frame, &malicious)?.fprime;
            net.mark_phase(format!("round {round}: anonymous entanglement"));
            let ae = anonymous_entanglement(&mut net, &state, sender, receiver, &coalition, rng)?;
            rounds.push(RoundOutcome {
                used_state_fprime: Some(f),
                c_epsilon: f <= threshold + C_EPSILON_TOL,
                ..outcome
            });
            return Ok(finish(net, rounds, Termination::Established, Some(ae)));
        }

        net.mark_phase(format!("round {round}: random agent"));
        let pick = random_agent(&mut net, sender, config.s, config.or_config, &coalition, rng)?;
        let verifier = match (pick.consistent, pick.agent) {
            (true, Some(v)) => v,
            _ => {
                rounds.push(outcome.abort(AbortReason::SenderConsistency));
                return Ok(finish(net, rounds, Termination::Aborted(AbortReason::SenderConsistency), None));
            }
        };

        net.mark_phase(format!("round {round}: verification"));
        let mut phi_frame = state;
        phi_frame.ghz_to_phi_frame();
        let v = verification_round(&mut net, &phi_frame, verifier, &coalition, rng)?;
        let outcome = RoundOutcome { verifier: Some(verifier), pass: Some(v.pass), ..outcome };
        if !v.pass {
            let reason = if v.forced { AbortReason::PolicyTriggered } else { AbortReason::VerificationFailed };
            rounds.push(outcome.abort(reason));
            return Ok(finish(net, rounds, Termination::Aborted(reason), None));
        }
        rounds.push(outcome);
    }
    Ok(finish(net, rounds, Termination::RoundLimit, None))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Bound {
    pub value: f64,
    /// The bound exceeds 1 and says nothing.
    pub vacuous: bool,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return invalid(format!("epsilon {epsilon} outside (0, 1)"));
    }
    Ok(())
}

/// 2⁻ˢ·4n / (1 − √(1−ε²)).
pub fn theorem1_bound(n: usize, s: usize, epsilon: f64) -> Result<Theorem1Bound> {
    check_epsilon(epsilon)?;
    let value = 0.5f64.powi(s as i32) * 4.0 * n as f64 / (1.0 - (1.0 - epsilon * epsilon).sqrt());
    Ok(Theorem1Bound { value, vacuous: value > 1.0 })
}

/// Smallest S with `theorem1_bound(n, S, ε) ≤ δ`: ⌈log₂(4n / ((1 − √(1−ε²))δ))⌉.
/// A logarithm within 1e-9 of an integer counts as that integer.
pub fn required_s(n: usize, epsilon: f64, delta: f64) -> Result<usize> {
    check_epsilon(epsilon)?;
    if !(delta > 0.0 && delta < 1.0) {
        return invalid(format!("delta {delta} outside (0, 1)"));
    }
    let x = (4.0 * n as f64 / ((1.0 - (1.0 - epsilon * epsilon).sqrt()) * delta)).log2();
    let r = x.round();
    let s = if (x - r).abs() < 1e-9 { r } else { x.ceil() };
    Ok(s.max(1.0) as usize)
}

/// 2⁻ˢ(1 − 2^{1−S} + 2^{−2S})^{l−1}(1 − (k − F′k)/(4n))^{l−1}.
pub fn per_round_cap(n: usize, k: usize, s: usize, fprime: f64, l: usize) -> Result<f64> {
    if l == 0 {
        return invalid("round index starts at 1");
    }
    if k == 0 || k > n {
        return invalid(format!("k = {k} outside 1..={n}"));
    }
    let two_s = 0.5f64.powi(s as i32);
    let coin = 1.0 - 2.0 * two_s + two_s * two_s;
    let test = 1.0 - (k as f64 - fprime * k as f64) / (4.0 * n as f64);
    let e = (l - 1) as i32;
    Ok(two_s * coin.powi(e) * test.powi(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_examples() {
        let b = theorem1_bound(4, 10, 0.6).unwrap();
        assert!((b.value - 0.078125).abs() < 1e-12 && !b.vacuous);
        let b = theorem1_bound(4, 5, 0.6).unwrap();
        assert!((b.value - 2.5).abs() < 1e-12 && b.vacuous);
        assert!(theorem1_bound(4, 5, 1.0).is_err());
        assert_eq!(required_s(4, 0.6, 0.05).unwrap(), 11);
        assert_eq!(required_s(4, 0.6, 0.078125).unwrap(), 10);
        assert!(required_s(4, 0.6, 1.0).is_err());
    }

    #[test]
    fn per_round_cap_first_round() {
        assert_eq!(per_round_cap(4, 3, 6, 0.8, 1).unwrap(), 2f64.powi(-6));
        assert!(per_round_cap(4, 3, 6, 0.8, 0).is_err());
    }

    #[test]
    fn honest_run_establishes_perfect_pair() {
        for seed in 0..20 {
            let cfg = ProtocolConfig::honest(4, 2, 0.6, 0.05, seed);
            let run = run_protocol5(&cfg).unwrap();
            if run.termination == Termination::ReceiverMissed {
                continue;
            }
            assert_eq!(run.termination, Termination::Established);
            assert!((run.pair_fidelity.unwrap() - 1.0).abs() < 1e-9);
            assert!(!run.c_epsilon());
            assert!(run.rounds[..run.rounds.len() - 1].iter().all(|r| r.pass == Some(true)));
        }
    }

    #[test]
    fn same_seed_same_run() {
        let mut cfg = ProtocolConfig::honest(3, 2, 0.6, 0.05, 42);
        cfg.record_transcript = true;
        let a = run_protocol5(&cfg).unwrap();
        let b = run_protocol5(&cfg).unwrap();
        assert_eq!(a.rounds, b.rounds);
        assert_eq!(a.transcript.unwrap().to_jsonl(), b.transcript.unwrap().to_jsonl());
    }

    #[test]
    fn config_validation() {
        let ok = ProtocolConfig::honest(3, 2, 0.6, 0.05, 0);
        assert!(ok.validate().is_ok());
        for bad in [
            ProtocolConfig { epsilon: 1.5, ..ok.clone() },
            ProtocolConfig { delta: 0.0, ..ok.clone() },
            ProtocolConfig { s: 0, ..ok.clone() },
            ProtocolConfig { honest: vec![], ..ok.clone() },
            ProtocolConfig { honest: vec![1, 1], ..ok.clone() },
            ProtocolConfig { sender: Some(1), receiver: Some(1), ..ok.clone() },
            ProtocolConfig { n: 1, honest: vec![1], ..ok.clone() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }
}
