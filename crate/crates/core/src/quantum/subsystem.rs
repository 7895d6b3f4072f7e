//! Honest/malicious splits of the shared state: F′ and the Φ₀ᵏ/Φ₁ᵏ decomposition.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::state::{fidelity, make_phi, StateVector};
use crate::error::{invalid, Result};

/// Split of the qubits `1..=n` into honest and malicious agents, both kept in
/// ascending order. Within each subsystem the lowest agent index is the most
/// significant bit of the local label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bipartition {
    n: usize,
    honest: Vec<usize>,
    malicious: Vec<usize>,
}

impl Bipartition {
    pub fn new(n: usize, malicious: &[usize]) -> Result<Self> {
        let mut mal = malicious.to_vec();
        mal.sort_unstable();
        mal.dedup();
        if mal.len() != malicious.len() {
            return invalid("duplicate agent in malicious set");
        }
        if let Some(&bad) = mal.iter().find(|&&a| a == 0 || a > n) {
            return invalid(format!("agent {bad} outside 1..={n}"));
        }
        let honest = (1..=n).filter(|a| mal.binary_search(a).is_err()).collect();
        Ok(Bipartition { n, honest, malicious: mal })
    }

    pub fn honest(&self) -> &[usize] {
        &self.honest
    }

    pub fn malicious(&self) -> &[usize] {
        &self.malicious
    }

    pub fn honest_dim(&self) -> usize {
        1 << self.honest.len()
    }

    pub fn malicious_dim(&self) -> usize {
        1 << self.malicious.len()
    }

    fn gather(&self, index: usize, agents: &[usize]) -> usize {
        agents.iter().fold(0, |acc, &q| (acc << 1) | ((index >> (self.n - q)) & 1))
    }

    /// Splits a global basis label into (honest label, malicious label).
    pub fn split(&self, index: usize) -> (usize, usize) {
        (self.gather(index, &self.honest), self.gather(index, &self.malicious))
    }

    /// Inverse of [`split`](Self::split).
    pub fn join(&self, h: usize, m: usize) -> usize {
        let mut index = 0;
        let kh = self.honest.len();
        for (pos, &q) in self.honest.iter().enumerate() {
            index |= ((h >> (kh - 1 - pos)) & 1) << (self.n - q);
        }
        let km = self.malicious.len();
        for (pos, &q) in self.malicious.iter().enumerate() {
            index |= ((m >> (km - 1 - pos)) & 1) << (self.n - q);
        }
        index
    }

    /// Reshapes a state into a (honest × malicious) coefficient matrix.
    fn reshape(&self, s: &StateVector) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.honest_dim(), self.malicious_dim());
        for (i, a) in s.amplitudes().iter().enumerate() {
            let (h, k) = self.split(i);
            m[(h, k)] = *a;
        }
        m
    }
}

/// F and F′ of a state against Φ₀ⁿ, plus the malicious unitary attaining F′.
#[derive(Clone, Debug)]
pub struct FidelityReport {
    pub fidelity: f64,
    pub fprime: f64,
    /// Acts on the malicious subsystem; 1×1 identity when the set is empty.
    pub maximizing_unitary: DMatrix<Complex64>,
}

/// F′(ψ) = max_U |⟨Φ₀ⁿ|(I ⊗ U)|ψ⟩|² over unitaries U on the malicious agents.
///
/// With ψ = Σ_h |h⟩|m_h⟩ and Φ₀ⁿ = Σ_h |h⟩|f_h⟩, the overlap is Tr(U M) for
/// M = Σ_h |m_h⟩⟨f_h|, whose maximum modulus is the nuclear norm of M. The
/// maximizer is V W† for M = W Σ V†.
pub fn fprime(state: &StateVector, malicious: &[usize]) -> Result<FidelityReport> {
    let n = state.num_qubits();
    let part = Bipartition::new(n, malicious)?;
    let phi0 = make_phi(n, false)?;
    let plain = fidelity(state, &phi0)?;
    if part.malicious.is_empty() {
        return Ok(FidelityReport {
            fidelity: plain,
            fprime: plain,
            maximizing_unitary: DMatrix::identity(1, 1),
        });
    }
    let psi = part.reshape(state);
    let phi = part.reshape(&phi0);
    let cross = psi.transpose() * phi.map(|z| z.conj());
    let (singular, w, v_t) = checked_svd(&cross)?;
    let nuclear: f64 = singular.iter().sum();
    let unitary = v_t.adjoint() * w.adjoint();
    Ok(FidelityReport {
        fidelity: plain,
        fprime: (nuclear * nuclear).clamp(0.0, 1.0),
        maximizing_unitary: unitary,
    })
}

/// Largest reconstruction error accepted from a decomposition.
const SVD_TOL: f64 = 1e-10;

/// Full SVD `m = W Σ V†`, returned as (Σ, W, V†) and verified by reconstruction.
///
/// Uses faer: nalgebra 0.35's complex SVD returns factors that do not
/// reproduce the input for some matrices with several zero singular values,
/// which every F′ cross matrix with more than two malicious dimensions has.
pub fn checked_svd(m: &DMatrix<Complex64>) -> Result<(Vec<f64>, DMatrix<Complex64>, DMatrix<Complex64>)> {
    let fail = |what: &str| crate::error::Error::ImprobableFailure(format!("SVD {what}"));
    let a = faer::Mat::<faer::c64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let svd = a.svd().map_err(|_| fail("did not converge"))?;
    let (u, v) = (svd.U(), svd.V());
    let w = DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)]);
    let v_t = DMatrix::from_fn(v.ncols(), v.nrows(), |i, j| v[(j, i)].conj());
    let sigma = svd.S().column_vector();
    let singular: Vec<f64> = (0..sigma.nrows()).map(|i| sigma[i].re).collect();
    let mut diag = DMatrix::<Complex64>::zeros(w.ncols(), v_t.nrows());
    for (i, s) in singular.iter().enumerate() {
        diag[(i, i)] = Complex64::new(*s, 0.0);
    }
    if (&w * diag * &v_t - m).norm() > SVD_TOL * m.norm().max(1.0) {
        return Err(fail("failed its reconstruction check"));
    }
    Ok((singular, w, v_t))
}

/// Eigendecomposition `m = V Λ V†` of a Hermitian matrix, returned as
/// (Λ ascending, V) and verified by reconstruction.
pub fn checked_hermitian_eigen(m: &DMatrix<Complex64>) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let fail = |what: &str| crate::error::Error::ImprobableFailure(format!("eigendecomposition {what}"));
    let a = faer::Mat::<faer::c64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let eig = a.self_adjoint_eigen(faer::Side::Lower).map_err(|_| fail("did not converge"))?;
    let u = eig.U();
    let vecs = DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)]);
    let s = eig.S().column_vector();
    let values: Vec<f64> = (0..s.nrows()).map(|i| s[i].re).collect();
    let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        values.len(),
        values.iter().map(|&x| Complex64::new(x, 0.0)),
    ));
    if (&vecs * diag * vecs.adjoint() - m).norm() > SVD_TOL * m.norm().max(1.0) {
        return Err(fail("failed its reconstruction check"));
    }
    Ok((values, vecs))
}

/// Applies `u` to the malicious subsystem of `state`.
pub fn apply_subsystem_unitary(
    state: &StateVector,
    malicious: &[usize],
    u: &DMatrix<Complex64>,
) -> Result<StateVector> {
    let part = Bipartition::new(state.num_qubits(), malicious)?;
    let dm = part.malicious_dim();
    if u.nrows() != dm || u.ncols() != dm {
        return invalid(format!("unitary must be {dm}×{dm}"));
    }
    let out = part.reshape(state) * u.transpose();
    let mut amps = vec![Complex64::new(0.0, 0.0); state.dim()];
    for h in 0..part.honest_dim() {
        for m in 0..dm {
            amps[part.join(h, m)] = out[(h, m)];
        }
    }
    StateVector::normalized(state.num_qubits(), amps)
}

/// Components of a state along Φ₀ᵏ and Φ₁ᵏ of the honest subsystem:
/// |ψ⟩ = |Φ₀ᵏ⟩|ψ₀⟩ + |Φ₁ᵏ⟩|ψ₁⟩ + |χ⟩.
#[derive(Clone, Debug)]
pub struct DecompositionResult {
    pub psi0: Vec<Complex64>,
    pub psi1: Vec<Complex64>,
    pub chi_norm_sq: f64,
}

impl DecompositionResult {
    pub fn psi0_norm_sq(&self) -> f64 {
        self.psi0.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn psi1_norm_sq(&self) -> f64 {
        self.psi1.iter().map(|a| a.norm_sqr()).sum()
    }
}

pub fn decompose_honest(state: &StateVector, malicious: &[usize]) -> Result<DecompositionResult> {
    let n = state.num_qubits();
    let part = Bipartition::new(n, malicious)?;
    let k = part.honest.len();
    if k == 0 {
        return invalid("decomposition needs at least one honest agent");
    }
    let psi = part.reshape(state);
    let project = |class_bit: bool| -> Result<Vec<Complex64>> {
        let phi = make_phi(k, class_bit)?;
        Ok((0..part.malicious_dim())
            .map(|m| (0..part.honest_dim()).map(|h| phi.amplitude(h).conj() * psi[(h, m)]).sum())
            .collect())
    };
    let psi0 = project(false)?;
    let psi1 = project(true)?;
    let norm: f64 = psi0.iter().chain(&psi1).map(|a| a.norm_sqr()).sum();
    Ok(DecompositionResult { psi0, psi1, chi_norm_sq: (state.norm_sqr() - norm).max(0.0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::random::random_state;
    use crate::rng::seeded;

    fn haar_unitary(d: usize, rng: &mut crate::rng::SimRng) -> DMatrix<Complex64> {
        let cols: Vec<_> = (0..d).map(|_| random_state(d.trailing_zeros() as usize, rng).unwrap()).collect();
        let m = DMatrix::from_fn(d, d, |r, c| cols[c].amplitude(r));
        m.qr().q()
    }

    #[test]
    fn checked_svd_handles_degenerate_spectra() {
        let mut rng = seeded(11);
        let a = Complex64::new(0.2f64.sqrt(), 0.0);
        let z = Complex64::new(0.0, 0.0);
        for _ in 0..2000 {
            let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![a, a, z, z]));
            let m = haar_unitary(4, &mut rng) * diag * haar_unitary(4, &mut rng);
            let (s, w, v_t) = checked_svd(&m).unwrap();
            let sigma = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(s.iter().map(|&x| Complex64::new(x, 0.0)).collect()));
            assert!((&w * sigma * &v_t - &m).norm() < 1e-9);
            assert!((s.iter().sum::<f64>() - 2.0 * 0.2f64.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn split_join_roundtrip() {
        let part = Bipartition::new(5, &[4, 2]).unwrap();
        assert_eq!(part.honest(), &[1, 3, 5]);
        assert_eq!(part.malicious(), &[2, 4]);
        for i in 0..32 {
            let (h, m) = part.split(i);
            assert_eq!(part.join(h, m), i);
        }
        // Label 0b10110: qubits 1..5 = 1,0,1,1,0 → honest (1,3,5) = 110, malicious (2,4) = 01.
        assert_eq!(part.split(0b10110), (0b110, 0b01));
    }

    #[test]
    fn bipartition_validates() {
        assert!(Bipartition::new(3, &[4]).is_err());
        assert!(Bipartition::new(3, &[0]).is_err());
        assert!(Bipartition::new(3, &[2, 2]).is_err());
    }

    #[test]
    fn fprime_of_phi0_is_one() {
        for n in 1..=5 {
            let p = make_phi(n, false).unwrap();
            for mal in [vec![], vec![1], vec![n], (1..=n).collect::<Vec<_>>()] {
                let r = fprime(&p, &mal).unwrap();
                assert!((r.fprime - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fprime_of_product_state() {
        // |00⟩ with agent 2 malicious: overlap (1/√2)⟨0|U|0⟩, maximal at 1/2.
        let s = StateVector::basis(2, 0).unwrap();
        let r = fprime(&s, &[2]).unwrap();
        assert!((r.fprime - 0.5).abs() < 1e-12);
        assert!((r.fidelity - 0.5).abs() < 1e-12);
    }

    #[test]
    fn maximizing_unitary_attains_fprime() {
        let mut rng = seeded(77);
        for _ in 0..20 {
            let s = random_state(4, &mut rng).unwrap();
            let mal = [2, 3];
            let r = fprime(&s, &mal).unwrap();
            let u = &r.maximizing_unitary;
            let uu = u.adjoint() * u;
            assert!((uu - DMatrix::<Complex64>::identity(4, 4)).norm() < 1e-9);
            let rotated = apply_subsystem_unitary(&s, &mal, u).unwrap();
            let f = fidelity(&rotated, &make_phi(4, false).unwrap()).unwrap();
            assert!((f - r.fprime).abs() < 1e-9);
            assert!(r.fprime + 1e-12 >= r.fidelity);
        }
    }

    #[test]
    fn decomposition_of_phi0_is_balanced() {
        for n in 2..=6 {
            for k in 1..n {
                let mal: Vec<usize> = (k + 1..=n).collect();
                let d = decompose_honest(&make_phi(n, false).unwrap(), &mal).unwrap();
                assert!((d.psi0_norm_sq() - 0.5).abs() < 1e-12);
                assert!((d.psi1_norm_sq() - 0.5).abs() < 1e-12);
                assert!(d.chi_norm_sq < 1e-12);
            }
        }
    }

    #[test]
    fn decomposition_of_all_zero_string() {
        for n in 1..=6 {
            let d = decompose_honest(&StateVector::basis(n, 0).unwrap(), &[]).unwrap();
            assert!((d.psi0_norm_sq() - 2f64.powi(-(n as i32 - 1))).abs() < 1e-12);
        }
    }

    #[test]
    fn decomposition_rejects_no_honest() {
        assert!(decompose_honest(&make_phi(2, false).unwrap(), &[1, 2]).is_err());
    }
}
