use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quantum::{fprime, make_phi, Bipartition, StateVector};

/// Largest allowed gap between the requested and the measured F′.
pub const CRAFT_TOL: f64 = 1e-9;

/// What the (possibly malicious) source emits each round.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceStrategy {
    Honest,
    BoundedFidelity { target_fprime: f64 },
}

impl SourceStrategy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SourceStrategy::Honest => Ok(()),
            SourceStrategy::BoundedFidelity { target_fprime } => check_target(target_fprime),
        }
    }

    /// A fresh state in the GHZ frame.
    pub fn emit<R: Rng + ?Sized>(&self, n: usize, malicious: &[usize], rng: &mut R) -> Result<StateVector> {
        match *self {
            SourceStrategy::Honest => crate::quantum::make_ghz(n),
            SourceStrategy::BoundedFidelity { target_fprime } => {
                let mut s = craft_state_with_fprime_random(n, malicious, target_fprime, rng)?;
                s.phi_to_ghz_frame();
                Ok(s)
            }
        }
    }
}

fn check_target(target: f64) -> Result<()> {
    if !(target > 0.0 && target <= 1.0) {
        return invalid(format!("target F′ {target} outside (0, 1]"));
    }
    Ok(())
}

fn embed(part: &Bipartition, n: usize, honest: &[Complex64], malicious: &[Complex64]) -> Vec<Complex64> {
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
    for (h, a) in honest.iter().enumerate() {
        for (m, b) in malicious.iter().enumerate() {
            amps[part.join(h, m)] = a * b;
        }
    }
    amps
}

/// Removes the Φ₀ᵏ and Φ₁ᵏ components of an honest-subsystem vector.
fn project_out_phis(k: usize, v: &mut [Complex64]) -> Result<()> {
    for class_bit in [false, true] {
        let phi = make_phi(k, class_bit)?;
        let overlap: Complex64 = phi.amplitudes().iter().zip(v.iter()).map(|(p, a)| p.conj() * a).sum();
        for (a, p) in v.iter_mut().zip(phi.amplitudes()) {
            *a -= overlap * p;
        }
    }
    Ok(())
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// √t·Φ₀ⁿ + √(1−t)·|χ⟩|m⟩ with χ on the honest agents orthogonal to Φ₀ᵏ and
/// Φ₁ᵏ. No unitary on the malicious side can overlap χ with Φ₀ⁿ, so F′ = t.
fn compose(n: usize, part: &Bipartition, target: f64, chi: &[Complex64], m: &[Complex64]) -> Result<StateVector> {
    let phi0 = make_phi(n, false)?;
    let dev = embed(part, n, chi, m);
    let (a, b) = (target.sqrt(), (1.0 - target).sqrt());
    let amps = phi0.amplitudes().iter().zip(&dev).map(|(p, d)| p * a + d * b).collect();
    StateVector::normalized(n, amps)
}

/// |0…0⟩ on the honest agents times a malicious state orthogonal to the
/// malicious component of Φ₀ⁿ at honest label 0. The result is orthogonal to
/// Φ₀ⁿ and leaves the honest agents in a pure state, the minimum of F′ for one
/// honest agent.
fn fallback_direction(n: usize, part: &Bipartition, mut m: Vec<Complex64>) -> Result<Vec<Complex64>> {
    let phi0 = make_phi(n, false)?;
    let f0: Vec<Complex64> = (0..part.malicious_dim()).map(|k| phi0.amplitude(part.join(0, k))).collect();
    let f0_sq: f64 = f0.iter().map(|a| a.norm_sqr()).sum();
    let overlap: Complex64 = f0.iter().zip(&m).map(|(f, a)| f.conj() * a).sum::<Complex64>() / f0_sq;
    for (a, f) in m.iter_mut().zip(&f0) {
        *a -= overlap * f;
    }
    if norm(&m) < 1e-9 {
        m = f0.iter().rev().map(|f| f.conj()).collect();
    }
    let mut h = vec![Complex64::new(0.0, 0.0); part.honest_dim()];
    h[0] = Complex64::new(1.0, 0.0);
    Ok(embed(part, n, &h, &m))
}

/// Fallback when no honest direction orthogonal to Φ₀ᵏ and Φ₁ᵏ exists (k = 1)
/// or the construction misses: bisect the weight of a fixed deviation `dev`
/// (orthogonal to Φ₀ⁿ) until F′ hits the target.
fn bisect(n: usize, malicious: &[usize], target: f64, dev: Vec<Complex64>) -> Result<StateVector> {
    let phi0 = make_phi(n, false)?;
    let overlap: Complex64 = phi0.amplitudes().iter().zip(&dev).map(|(p, a)| p.conj() * a).sum();
    let mut dev: Vec<Complex64> = dev.iter().zip(phi0.amplitudes()).map(|(d, p)| d - overlap * p).collect();
    let len = norm(&dev);
    if len < 1e-12 {
        return invalid("deviation direction is parallel to Φ₀");
    }
    dev.iter_mut().for_each(|a| *a /= len);
    let mix = |c: f64| -> Result<(StateVector, f64)> {
        let amps = phi0.amplitudes().iter().zip(&dev).map(|(p, d)| p * c.sqrt() + d * (1.0 - c).sqrt()).collect();
        let s = StateVector::normalized(n, amps)?;
        let f = fprime(&s, malicious)?.fprime;
        Ok((s, f))
    };
    let (s0, f0) = mix(0.0)?;
    if f0 >= target {
        if (f0 - target).abs() <= CRAFT_TOL {
            return Ok(s0);
        }
        return invalid(format!("F′ {target} is below the reachable minimum {f0:.6} for this split"));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut best = mix(1.0)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (s, f) = mix(mid)?;
        if f < target {
            lo = mid;
        } else {
            hi = mid;
        }
        best = (s, f);
        if (best.1 - target).abs() <= CRAFT_TOL * 0.1 {
            break;
        }
    }
    if (best.1 - target).abs() > CRAFT_TOL {
        return invalid(format!("bisection stalled at F′ {} for target {target}", best.1));
    }
    Ok(best.0)
}

fn finish(n: usize, malicious: &[usize], target: f64, state: StateVector, fallback: Vec<Complex64>) -> Result<StateVector> {
    let got = fprime(&state, malicious)?.fprime;
    if (got - target).abs() <= CRAFT_TOL {
        Ok(state)
    } else {
        bisect(n, malicious, target, fallback)
    }
}

/// Deterministic Φ₀-frame state with F′ = `target` for the given malicious set.
/// The deviation is the normalized part of |0…0⟩ (honest) outside Φ₀ᵏ and Φ₁ᵏ,
/// times |0…0⟩ on the malicious agents.
pub fn craft_state_with_fprime(n: usize, malicious: &[usize], target: f64) -> Result<StateVector> {
    check_target(target)?;
    let part = Bipartition::new(n, malicious)?;
    let k = part.honest().len();
    if k == 0 {
        return invalid("at least one honest agent is required");
    }
    if target == 1.0 {
        return make_phi(n, false);
    }
    let mut m = vec![Complex64::new(0.0, 0.0); part.malicious_dim()];
    m[0] = Complex64::new(1.0, 0.0);
    let mut chi = vec![Complex64::new(0.0, 0.0); part.honest_dim()];
    chi[0] = Complex64::new(1.0, 0.0);
    let fallback = fallback_direction(n, &part, m.clone())?;
    if k >= 2 {
        project_out_phis(k, &mut chi)?;
        let len = norm(&chi);
        chi.iter_mut().for_each(|a| *a /= len);
        let state = compose(n, &part, target, &chi, &m)?;
        return finish(n, malicious, target, state, fallback);
    }
    bisect(n, malicious, target, fallback)
}

fn gaussian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<Complex64> {
    (0..dim).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect()
}

/// As [`craft_state_with_fprime`] with a random honest deviation direction and a
/// random malicious state, so every call yields a fresh state.
pub fn craft_state_with_fprime_random<R: Rng + ?Sized>(
    n: usize,
    malicious: &[usize],
    target: f64,
    rng: &mut R,
) -> Result<StateVector> {
    check_target(target)?;
    let part = Bipartition::new(n, malicious)?;
    let k = part.honest().len();
    if k == 0 {
        return invalid("at least one honest agent is required");
    }
    if target == 1.0 {
        return make_phi(n, false);
    }
    let mut m = gaussian(part.malicious_dim(), rng);
    let len = norm(&m);
    m.iter_mut().for_each(|a| *a /= len);
    let mut chi = gaussian(part.honest_dim(), rng);
    let fallback = fallback_direction(n, &part, m.clone())?;
    if k >= 2 {
        project_out_phis(k, &mut chi)?;
        let len = norm(&chi);
        chi.iter_mut().for_each(|a| *a /= len);
        let state = compose(n, &part, target, &chi, &m)?;
        return finish(n, malicious, target, state, fallback);
    }
    bisect(n, malicious, target, fallback)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::fidelity;
    use crate::rng::seeded;

    #[test]
    fn target_one_is_phi0() {
        let s = craft_state_with_fprime(4, &[4], 1.0).unwrap();
        assert!((fidelity(&s, &make_phi(4, false).unwrap()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hits_target() {
        for (n, mal) in [(4, vec![4]), (3, vec![]), (5, vec![2, 5]), (3, vec![1, 2]), (2, vec![2])] {
            for target in [0.64, 0.7, 0.8, 0.9798] {
                let s = craft_state_with_fprime(n, &mal, target).unwrap();
                let f = fprime(&s, &mal).unwrap().fprime;
                assert!((f - target).abs() < 1e-9, "n={n} mal={mal:?} target={target} got {f}");
            }
        }
    }

    #[test]
    fn single_honest_agent_floor() {
        // The honest qubit of Φ₀ⁿ is maximally mixed, so F′ never drops below 1/2.
        assert!(craft_state_with_fprime(3, &[2, 3], 0.3).is_err());
        let s = craft_state_with_fprime(3, &[2, 3], 0.55).unwrap();
        assert!((fprime(&s, &[2, 3]).unwrap().fprime - 0.55).abs() < 1e-9);
    }

    #[test]
    fn random_variant_is_fresh() {
        let mut rng = seeded(3);
        let a = craft_state_with_fprime_random(4, &[3], 0.8, &mut rng).unwrap();
        let b = craft_state_with_fprime_random(4, &[3], 0.8, &mut rng).unwrap();
        assert!(fidelity(&a, &b).unwrap() < 1.0 - 1e-6);
        for s in [a, b] {
            assert!((fprime(&s, &[3]).unwrap().fprime - 0.8).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_target() {
        assert!(craft_state_with_fprime(3, &[], 0.0).is_err());
        assert!(craft_state_with_fprime(3, &[], 1.2).is_err());
        assert!(SourceStrategy::BoundedFidelity { target_fprime: 0.0 }.validate().is_err());
    }

    #[test]
    fn emit_is_in_ghz_frame() {
        let mut rng = seeded(4);
        let mut s = SourceStrategy::BoundedFidelity { target_fprime: 0.8 }.emit(4, &[1], &mut rng).unwrap();
        s.ghz_to_phi_frame();
        assert!((fprime(&s, &[1]).unwrap().fprime - 0.8).abs() < 1e-9);
        let g = SourceStrategy::Honest.emit(4, &[1], &mut rng).unwrap();
        assert!((fidelity(&g, &crate::quantum::make_ghz(4).unwrap()).unwrap() - 1.0).abs() < 1e-12);
    }
}
