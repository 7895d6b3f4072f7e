//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use anonq::quantum::StateVector;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Φ₀ⁿ from its definition as (H·√Z)^⊗n applied to GHZ: amplitude i^{|y|} on
/// even-weight strings, normalized.
pub fn phi0_amplitudes(n: usize) -> Vec<Complex64> {
    let norm = (2f64).powf((n as f64 - 1.0) / 2.0);
    (0..1usize << n)
        .map(|y| {
            let w = y.count_ones();
            if w % 2 == 1 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::i().powu(w) / norm
            }
        })
        .collect()
}

/// Applies a (not necessarily unitary) operator to `qubits`, first listed = most
/// significant local bit. Qubit q of n sits at bit n − q.
pub fn apply_on(amps: &[Complex64], n: usize, qubits: &[usize], op: &DMatrix<Complex64>) -> Vec<Complex64> {
    let m = qubits.len();
    let local = |index: usize| qubits.iter().fold(0, |acc, &q| (acc << 1) | ((index >> (n - q)) & 1));
    let with_local = |index: usize, l: usize| {
        qubits.iter().enumerate().fold(index, |acc, (pos, &q)| {
            let bit = (l >> (m - 1 - pos)) & 1;
            (acc & !(1 << (n - q))) | (bit << (n - q))
        })
    };
    let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
    for (i, a) in amps.iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        let col = local(i);
        for row in 0..1usize << m {
            out[with_local(i, row)] += op[(row, col)] * a;
        }
    }
    out
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(d, d, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    g.qr().q()
}

/// (I + iηG/2)(I − iηG/2)⁻¹, unitary for Hermitian G.
fn cayley(g: &DMatrix<Complex64>, eta: f64) -> DMatrix<Complex64> {
    let d = g.nrows();
    let half = g * Complex64::new(0.0, eta / 2.0);
    let id = DMatrix::<Complex64>::identity(d, d);
    (&id + &half) * (&id - &half).try_inverse().expect("I − iηG/2 is invertible for Hermitian G")
}

/// max over unitaries U on `malicious` of |⟨Φ₀ⁿ|(I ⊗ U)|ψ⟩|², by Riemannian
/// gradient ascent with Cayley steps from `restarts` random starting points.
pub fn fprime_by_search<R: Rng + ?Sized>(state: &StateVector, malicious: &[usize], restarts: usize, rng: &mut R) -> f64 {
    let n = state.num_qubits();
    let phi = phi0_amplitudes(n);
    if malicious.is_empty() {
        return dot(&phi, state.amplitudes()).norm_sqr();
    }
    let d = 1usize << malicious.len();
    // Overlap is linear in U: c(U) = Tr(U A) with A[b][a] = c(E_ab).
    let mut a = DMatrix::<Complex64>::zeros(d, d);
    for r in 0..d {
        for c in 0..d {
            let mut e = DMatrix::<Complex64>::zeros(d, d);
            e[(r, c)] = Complex64::new(1.0, 0.0);
            a[(c, r)] = dot(&phi, &apply_on(state.amplitudes(), n, malicious, &e));
        }
    }
    let value = |u: &DMatrix<Complex64>| (u * &a).trace().norm_sqr();
    let mut best = 0.0f64;
    for _ in 0..restarts {
        let mut u = random_unitary(d, rng);
        let mut f = value(&u);
        let mut eta = 0.5;
        for _ in 0..20_000 {
            let c = (&u * &a).trace();
            let x = (&u * &a) * (Complex64::i() * c.conj());
            let g = (&x + x.adjoint()) * Complex64::new(0.5, 0.0);
            if g.norm() < 1e-13 {
                break;
            }
            let mut moved = false;
            while eta > 1e-12 {
                let candidate = cayley(&g, eta) * &u;
                let fc = value(&candidate);
                if fc > f {
                    u = candidate;
                    f = fc;
                    eta *= 1.5;
                    moved = true;
                    break;
                }
                eta *= 0.5;
            }
            if !moved {
                break;
            }
        }
        best = best.max(f);
    }
    best
}
