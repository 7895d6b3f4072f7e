use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::{Action, Coalition, Hook};
use crate::error::{invalid, Result};
use crate::network::{AgentId, Network};
use crate::quantum::{phi_to_ghz_gate, StateVector};
use crate::stats::{wilson99, Interval};

/// Tolerance when checking that the angles sum to a multiple of π.
pub const ANGLE_TOL: f64 = 1e-9;

/// Measurement angles θⱼ ∈ [0, π) whose sum is `multiple`·π.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleAssignment {
    pub thetas: Vec<f64>,
    pub multiple: u64,
    pub multiple_parity: bool,
}

impl AngleAssignment {
    pub fn from_angles(thetas: Vec<f64>) -> Result<Self> {
        if let Some(t) = thetas.iter().find(|t| !(0.0..PI).contains(*t)) {
            return invalid(format!("angle {t} outside [0, π)"));
        }
        let units = thetas.iter().sum::<f64>() / PI;
        let multiple = units.round();
        if (units - multiple).abs() * PI > ANGLE_TOL {
            return invalid(format!("angles sum to {units}π, not a multiple of π"));
        }
        let multiple = multiple as u64;
        Ok(AngleAssignment { thetas, multiple, multiple_parity: multiple % 2 == 1 })
    }
}

/// θ₁..θₙ₋₁ uniform on [0, π); θₙ tops the sum up to the next multiple of π.
pub fn sample_angles<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<AngleAssignment> {
    if n < 2 {
        return invalid("verification needs at least two agents");
    }
    let draws: Vec<f64> = (0..n - 1).map(|_| rng.random_range(0.0..PI)).collect();
    angles_from_draws(&draws)
}

/// Completes the first n − 1 angles with the last one.
pub fn angles_from_draws(draws: &[f64]) -> Result<AngleAssignment> {
    let total: f64 = draws.iter().sum();
    let mut last = (PI - total.rem_euclid(PI)).rem_euclid(PI);
    if last >= PI - ANGLE_TOL || last < ANGLE_TOL {
        last = 0.0;
    }
    let mut thetas = draws.to_vec();
    thetas.push(last);
    AngleAssignment::from_angles(thetas)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationResult {
    pub angles: AngleAssignment,
    /// Yⱼ as reported to the Verifier.
    pub outcomes: Vec<bool>,
    /// Whether ⊕Yⱼ matches the parity of the angle multiple.
    pub test_passed: bool,
    /// The Verifier's verdict, which a malicious Verifier may override.
    pub pass: bool,
    pub verifier: AgentId,
    /// The verdict differs from the test outcome.
    pub forced: bool,
}

/// One verification round on a state given in the Φ₀ frame, with the angles
/// already chosen. Each qubit is taken back to the GHZ frame and measured in
/// {|+_θ⟩, |−_θ⟩}; malicious agents report through their policies.
pub fn verify_with_angles<R: Rng + ?Sized>(
    state: &StateVector,
    angles: AngleAssignment,
    verifier: AgentId,
    coalition: &Coalition,
    rng: &mut R,
) -> Result<VerificationResult> {
    let n = state.num_qubits();
    if angles.thetas.len() != n {
        return invalid(format!("{} angles for {n} agents", angles.thetas.len()));
    }
    if verifier.0 == 0 || verifier.0 > n {
        return invalid(format!("verifier {verifier} outside 1..={n}"));
    }
    let mut psi = state.clone();
    let back = phi_to_ghz_gate();
    let mut outcomes = Vec::with_capacity(n);
    for (j, &theta) in angles.thetas.iter().enumerate() {
        let q = j + 1;
        psi.apply(q, &back)?;
        let measured = psi.measure_theta_basis(q, theta, rng)?;
        let reported = match coalition.act(AgentId(q), Hook::VerificationReport { measured }) {
            Some(Action::Report(y)) => y,
            _ => measured,
        };
        outcomes.push(reported);
    }
    let parity = outcomes.iter().fold(false, |acc, &y| acc ^ y);
    let test_passed = parity == angles.multiple_parity;
    let (pass, forced) = match coalition.act(verifier, Hook::VerifierDecision { test_passed }) {
        Some(Action::Decide { accept, forced }) => (accept, forced),
        _ => (test_passed, false),
    };
    Ok(VerificationResult { angles, outcomes, test_passed, pass, verifier, forced })
}

/// Protocol round over the fabric: the Verifier samples angles, every agent
/// measures and privately reports Yⱼ, and the Verifier broadcasts the verdict.
pub fn verification_round<R: Rng + ?Sized>(
    net: &mut Network,
    state: &StateVector,
    verifier: AgentId,
    coalition: &Coalition,
    rng: &mut R,
) -> Result<VerificationResult> {
    net.agent(verifier.0)?;
    if state.num_qubits() != net.n() {
        return invalid("state size does not match the network");
    }
    let angles = sample_angles(net.n(), rng)?;
    let result = verify_with_angles(state, angles, verifier, coalition, rng)?;
    for (j, &y) in result.outcomes.iter().enumerate() {
        net.send_private(AgentId(j + 1), verifier, &[y])?;
    }
    net.broadcast(verifier, &[result.pass])?;
    Ok(result)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PassEstimate {
    pub passes: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub interval: Interval,
}

/// Monte Carlo estimate of P(Ψ) with every agent honest; 99% Wilson interval.
pub fn estimate_pass_probability<R: Rng + ?Sized>(
    state: &StateVector,
    trials: u64,
    rng: &mut R,
) -> Result<PassEstimate> {
    if trials == 0 {
        return invalid("trials must be at least 1");
    }
    let n = state.num_qubits();
    let honest = Coalition::honest();
    let mut passes = 0;
    for _ in 0..trials {
        let angles = sample_angles(n, rng)?;
        passes += verify_with_angles(state, angles, AgentId(1), &honest, rng)?.pass as u64;
    }
    Ok(PassEstimate { passes, trials, p_hat: passes as f64 / trials as f64, interval: wilson99(passes, trials) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::MaliciousAgentPolicy;
    use crate::quantum::make_phi;
    use crate::rng::seeded;

    #[test]
    fn two_agent_completion() {
        let a = angles_from_draws(&[0.3 * PI]).unwrap();
        assert!((a.thetas[1] - 0.7 * PI).abs() < 1e-12);
        assert_eq!(a.multiple, 1);
        assert!(a.multiple_parity);
        let z = angles_from_draws(&[0.0, 0.0]).unwrap();
        assert_eq!(z.thetas, vec![0.0; 3]);
        assert!(!z.multiple_parity);
    }

    #[test]
    fn sampled_angles_are_valid() {
        let mut rng = seeded(1);
        for n in 2..=8 {
            for _ in 0..200 {
                let a = sample_angles(n, &mut rng).unwrap();
                assert!(a.thetas.iter().all(|t| (0.0..PI).contains(t)));
                let units = a.thetas.iter().sum::<f64>() / PI;
                assert!((units - a.multiple as f64).abs() < 1e-9);
            }
        }
        assert!(sample_angles(1, &mut rng).is_err());
    }

    #[test]
    fn rejects_bad_angles() {
        assert!(AngleAssignment::from_angles(vec![PI, 0.0]).is_err());
        assert!(AngleAssignment::from_angles(vec![0.1, 0.2]).is_err());
    }

    #[test]
    fn ideal_state_passes_and_complement_fails() {
        let mut rng = seeded(2);
        let honest = Coalition::honest();
        for n in 2..=5 {
            let phi0 = make_phi(n, false).unwrap();
            let phi1 = make_phi(n, true).unwrap();
            for _ in 0..300 {
                let a = sample_angles(n, &mut rng).unwrap();
                assert!(verify_with_angles(&phi0, a.clone(), AgentId(1), &honest, &mut rng).unwrap().pass);
                assert!(!verify_with_angles(&phi1, a, AgentId(1), &honest, &mut rng).unwrap().pass);
            }
        }
    }

    #[test]
    fn lying_agent_flips_the_verdict() {
        let mut rng = seeded(3);
        let policy = MaliciousAgentPolicy { lie_in_verification: true, ..Default::default() };
        let coalition = Coalition::uniform(4, [2], policy).unwrap();
        let phi0 = make_phi(4, false).unwrap();
        for _ in 0..100 {
            let a = sample_angles(4, &mut rng).unwrap();
            assert!(!verify_with_angles(&phi0, a, AgentId(1), &coalition, &mut rng).unwrap().pass);
        }
    }

    #[test]
    fn accepting_verifier_overrides() {
        let mut rng = seeded(4);
        let coalition = Coalition::uniform(3, [3], MaliciousAgentPolicy::worst_case_verifier()).unwrap();
        let phi1 = make_phi(3, true).unwrap();
        let mut net = Network::new(3, &coalition.malicious_set(), true).unwrap();
        let r = verification_round(&mut net, &phi1, AgentId(3), &coalition, &mut rng).unwrap();
        assert!(r.pass && r.forced && !r.test_passed);
        assert_eq!(net.transcript().messages.len(), 4);
    }

    #[test]
    fn estimate_on_ideal_state() {
        let mut rng = seeded(5);
        let e = estimate_pass_probability(&make_phi(3, false).unwrap(), 500, &mut rng).unwrap();
        assert_eq!(e.passes, 500);
        assert_eq!(e.interval.high, 1.0);
        assert!(estimate_pass_probability(&make_phi(3, false).unwrap(), 0, &mut rng).is_err());
    }
}
