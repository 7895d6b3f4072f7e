//! Random pure states for experiments and tests.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::state::StateVector;
use crate::error::{invalid, Result};

fn gaussian_amps<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<Complex64> {
    (0..dim)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect()
}

/// Haar-random pure state.
pub fn random_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<StateVector> {
    StateVector::normalized(n, gaussian_amps(1 << n, rng))
}

/// Haar-random unit vector orthogonal to `reference`.
pub fn random_orthogonal_to<R: Rng + ?Sized>(reference: &StateVector, rng: &mut R) -> Result<StateVector> {
    let n = reference.num_qubits();
    loop {
        let mut v = gaussian_amps(1 << n, rng);
        let overlap: Complex64 =
            reference.amplitudes().iter().zip(&v).map(|(r, a)| r.conj() * a).sum();
        for (a, r) in v.iter_mut().zip(reference.amplitudes()) {
            *a -= overlap * r;
        }
        if v.iter().map(|a| a.norm_sqr()).sum::<f64>() > 1e-12 {
            return StateVector::normalized(n, v);
        }
    }
}

/// √f·|reference⟩ + √(1−f)·|r⟩ with `r` random and orthogonal to `reference`,
/// so the result has fidelity exactly `f` with the reference.
pub fn with_fidelity<R: Rng + ?Sized>(reference: &StateVector, f: f64, rng: &mut R) -> Result<StateVector> {
    if !(0.0..=1.0).contains(&f) {
        return invalid(format!("fidelity {f} outside [0, 1]"));
    }
    let noise = random_orthogonal_to(reference, rng)?;
    let (a, b) = (f.sqrt(), (1.0 - f).sqrt());
    let amps = reference
        .amplitudes()
        .iter()
        .zip(noise.amplitudes())
        .map(|(r, e)| r * a + e * b)
        .collect();
    StateVector::normalized(reference.num_qubits(), amps)
}
