use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::quantum::{checked_hermitian_eigen, StateVector};

/// Eigenvalues below this are treated as outside the support of ρ̄.
pub const SUPPORT_TOL: f64 = 1e-12;

/// Candidate post-Sender states, one per honest agent, with uniform priors.
#[derive(Clone, Debug)]
pub struct DiscriminationEnsemble {
    pub senders: Vec<usize>,
    pub candidates: Vec<StateVector>,
    pub priors: Vec<f64>,
    /// Attached by [`pretty_good_measurement`]; `None` until then.
    pub measurement: Option<Vec<DMatrix<Complex64>>>,
}

impl DiscriminationEnsemble {
    pub fn new(senders: Vec<usize>, candidates: Vec<StateVector>) -> Result<Self> {
        if candidates.is_empty() || senders.len() != candidates.len() {
            return invalid("ensemble needs one candidate per sender and at least one");
        }
        let n = candidates[0].num_qubits();
        if candidates.iter().any(|c| c.num_qubits() != n) {
            return invalid("candidates differ in size");
        }
        let k = candidates.len();
        Ok(DiscriminationEnsemble { senders, candidates, priors: vec![1.0 / k as f64; k], measurement: None })
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    fn dim(&self) -> usize {
        self.candidates[0].dim()
    }

    /// Σ pᵢ Tr(Πᵢ ρᵢ) for the attached measurement.
    pub fn success_probability(&self) -> Option<f64> {
        let ops = self.measurement.as_ref()?;
        Some(
            self.candidates
                .iter()
                .zip(&self.priors)
                .zip(ops)
                .map(|((c, p), pi)| {
                    let v = column(c);
                    p * (v.adjoint() * pi * &v)[(0, 0)].re
                })
                .sum(),
        )
    }
}

fn column(s: &StateVector) -> DVector<Complex64> {
    DVector::from_column_slice(s.amplitudes())
}

fn projector(s: &StateVector) -> DMatrix<Complex64> {
    let v = column(s);
    &v * v.adjoint()
}

/// Candidates σxσz|Ψ⟩ applied by each honest agent in `honest`.
pub fn build_sender_ensemble(state: &StateVector, honest: &[usize]) -> Result<DiscriminationEnsemble> {
    if honest.is_empty() {
        return invalid("honest set must not be empty");
    }
    let candidates = honest
        .iter()
        .map(|&i| {
            let mut s = state.clone();
            s.sender_transform(i)?;
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    DiscriminationEnsemble::new(honest.to_vec(), candidates)
}

/// ½ + ¼‖ρ₁ − ρ₂‖₁ for two equiprobable pure states.
pub fn helstrom_guess_prob(rho1: &StateVector, rho2: &StateVector) -> Result<f64> {
    if rho1.num_qubits() != rho2.num_qubits() {
        return invalid("dimension mismatch");
    }
    let diff = projector(rho1) - projector(rho2);
    let (values, _) = checked_hermitian_eigen(&diff)?;
    let trace_norm: f64 = values.iter().map(|l| l.abs()).sum();
    Ok((0.5 + 0.25 * trace_norm).min(1.0))
}

/// Πᵢ = ρ̄^{-1/2} pᵢρᵢ ρ̄^{-1/2} on the support of ρ̄ = Σ pᵢρᵢ, with the
/// complement split evenly so the operators sum to the identity.
pub fn pretty_good_measurement(ensemble: &mut DiscriminationEnsemble) -> Result<&[DMatrix<Complex64>]> {
    if ensemble.is_empty() {
        return invalid("empty ensemble");
    }
    let d = ensemble.dim();
    let k = ensemble.len();
    let mut avg = DMatrix::<Complex64>::zeros(d, d);
    for (c, p) in ensemble.candidates.iter().zip(&ensemble.priors) {
        avg += projector(c) * Complex64::new(*p, 0.0);
    }
    let (values, vectors) = checked_hermitian_eigen(&avg)?;
    let mut inv_sqrt = DMatrix::<Complex64>::zeros(d, d);
    let mut support = DMatrix::<Complex64>::zeros(d, d);
    for (idx, &lambda) in values.iter().enumerate() {
        if lambda > SUPPORT_TOL {
            let v = vectors.column(idx);
            let outer = &v * v.adjoint();
            inv_sqrt += &outer * Complex64::new(1.0 / lambda.sqrt(), 0.0);
            support += outer;
        }
    }
    let complement = (DMatrix::<Complex64>::identity(d, d) - support) * Complex64::new(1.0 / k as f64, 0.0);
    let ops = ensemble
        .candidates
        .iter()
        .zip(&ensemble.priors)
        .map(|(c, p)| &inv_sqrt * projector(c) * &inv_sqrt * Complex64::new(*p, 0.0) + &complement)
        .collect();
    ensemble.measurement = Some(ops);
    Ok(ensemble.measurement.as_deref().expect("just set"))
}

/// Success probability of the pretty-good measurement.
pub fn pgm_guess_prob(ensemble: &DiscriminationEnsemble) -> Result<f64> {
    let mut e = ensemble.clone();
    pretty_good_measurement(&mut e)?;
    Ok(e.success_probability().expect("measurement attached"))
}
