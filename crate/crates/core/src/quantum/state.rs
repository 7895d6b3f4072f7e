use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use super::gate::Gate2x2;
use crate::error::{invalid, Result};

pub const MAX_QUBITS: usize = 12;

/// Tolerance on Σ|a|² = 1 for states handed to or returned by this module.
pub const NORM_TOL: f64 = 1e-9;

/// Dense pure state over `num_qubits` qubits.
///
/// Qubit `q` (1-based) is owned by agent `q` and is bit `num_qubits - q` of a
/// basis label, so qubit 1 is the most significant bit.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

fn check_qubits(n: usize) -> Result<()> {
    if !(1..=MAX_QUBITS).contains(&n) {
        return invalid(format!("qubit count {n} outside 1..={MAX_QUBITS}"));
    }
    Ok(())
}

impl StateVector {
    /// Wraps amplitudes that must already be normalized.
    pub fn new(num_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_qubits(num_qubits)?;
        if amps.len() != 1 << num_qubits {
            return invalid(format!(
                "expected {} amplitudes for {num_qubits} qubits, got {}",
                1usize << num_qubits,
                amps.len()
            ));
        }
        let s = StateVector { num_qubits, amps };
        let norm = s.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return invalid(format!("state norm² is {norm}, expected 1"));
        }
        Ok(s)
    }

    /// Normalizes `amps` and wraps them.
    pub fn normalized(num_qubits: usize, mut amps: Vec<Complex64>) -> Result<Self> {
        check_qubits(num_qubits)?;
        if amps.len() != 1 << num_qubits {
            return invalid("amplitude count does not match qubit count");
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 1e-300) || !norm.is_finite() {
            return invalid("cannot normalize a zero vector");
        }
        for a in &mut amps {
            *a /= norm;
        }
        Ok(StateVector { num_qubits, amps })
    }

    /// Computational basis state with label `index`.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        check_qubits(num_qubits)?;
        if index >= 1 << num_qubits {
            return invalid(format!("basis index {index} out of range"));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(StateVector { num_qubits, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        self.same_size(other)?;
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// Multiplies every amplitude by `c`; used for global phases in tests.
    pub fn scaled(&self, c: Complex64) -> StateVector {
        StateVector { num_qubits: self.num_qubits, amps: self.amps.iter().map(|a| a * c).collect() }
    }

    /// Largest |a_i − b_i|, with no phase alignment.
    pub fn max_abs_diff(&self, other: &StateVector) -> Result<f64> {
        self.same_size(other)?;
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    /// `self ⊗ other`, with `self` on the leading (more significant) qubits.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let n = self.num_qubits + other.num_qubits;
        check_qubits(n)?;
        let mut amps = Vec::with_capacity(1 << n);
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(StateVector { num_qubits: n, amps })
    }

    fn same_size(&self, other: &StateVector) -> Result<()> {
        if self.num_qubits != other.num_qubits {
            return invalid(format!(
                "dimension mismatch: {} vs {} qubits",
                self.num_qubits, other.num_qubits
            ));
        }
        Ok(())
    }

    pub(crate) fn mask(&self, q: usize) -> Result<usize> {
        if q == 0 || q > self.num_qubits {
            return invalid(format!("qubit {q} outside 1..={}", self.num_qubits));
        }
        Ok(1 << (self.num_qubits - q))
    }

    /// Applies `g` to qubit `q`.
    pub fn apply(&mut self, q: usize, g: &Gate2x2) -> Result<()> {
        let mask = self.mask(q)?;
        let m = g.matrix();
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let j = i | mask;
                let (a0, a1) = (self.amps[i], self.amps[j]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        Ok(())
    }

    /// Applies `g` to every qubit.
    pub fn apply_all(&mut self, g: &Gate2x2) {
        for q in 1..=self.num_qubits {
            self.apply(q, g).expect("qubit in range");
        }
    }

    /// Applies `g` to `target` on the branch where `control` is 1.
    pub fn apply_controlled(&mut self, control: usize, target: usize, g: &Gate2x2) -> Result<()> {
        let cm = self.mask(control)?;
        let tm = self.mask(target)?;
        if cm == tm {
            return invalid("control and target must differ");
        }
        let m = g.matrix();
        for i in 0..self.amps.len() {
            if i & cm != 0 && i & tm == 0 {
                let j = i | tm;
                let (a0, a1) = (self.amps[i], self.amps[j]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        Ok(())
    }

    /// Born probability that qubit `q` reads 1.
    pub fn prob_one(&self, q: usize) -> Result<f64> {
        let mask = self.mask(q)?;
        let p: f64 = self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        Ok(p.clamp(0.0, 1.0))
    }

    /// Projects qubit `q` onto `outcome` and renormalizes. Returns the branch
    /// probability; a zero-probability branch leaves the state untouched and
    /// returns 0.
    pub fn collapse(&mut self, q: usize, outcome: bool) -> Result<f64> {
        let mask = self.mask(q)?;
        let p: f64 = self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| (i & mask != 0) == outcome)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        if p <= 0.0 {
            return Ok(0.0);
        }
        let scale = 1.0 / p.sqrt();
        for (i, a) in self.amps.iter_mut().enumerate() {
            if (i & mask != 0) == outcome {
                *a *= scale;
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        Ok(p)
    }

    /// Measures qubit `q` in the computational basis.
    pub fn measure_computational<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) -> Result<bool> {
        let p1 = self.prob_one(q)?;
        // Sampling against p1 directly never selects a zero-probability branch.
        let outcome = rng.random::<f64>() < p1;
        self.collapse(q, outcome)?;
        Ok(outcome)
    }

    /// Measures qubit `q` in {|+_θ⟩, |−_θ⟩} with |±_θ⟩ = (|0⟩ ± e^{iθ}|1⟩)/√2.
    /// Outcome `false` (Y = 0) is |+_θ⟩. The qubit is left in the observed basis state.
    pub fn measure_theta_basis<R: Rng + ?Sized>(
        &mut self,
        q: usize,
        theta: f64,
        rng: &mut R,
    ) -> Result<bool> {
        if !(0.0..PI).contains(&theta) {
            return invalid(format!("theta {theta} outside [0, π)"));
        }
        self.mask(q)?;
        let rotate = Gate2x2::hadamard() * Gate2x2::phase(-theta);
        self.apply(q, &rotate)?;
        let y = self.measure_computational(q, rng)?;
        self.apply(q, &rotate.adjoint())?;
        Ok(y)
    }

    /// Amplitudes of the qubits `keep` (in the given order, first is most
    /// significant) with every other qubit pinned by `fixed`, renormalized.
    /// After a computational measurement of the `fixed` qubits this is the
    /// post-measurement state of the rest.
    pub fn slice(&self, keep: &[usize], fixed: &[(usize, bool)]) -> Result<StateVector> {
        let mut seen = vec![false; self.num_qubits];
        for q in keep.iter().copied().chain(fixed.iter().map(|&(q, _)| q)) {
            self.mask(q)?;
            if std::mem::replace(&mut seen[q - 1], true) {
                return invalid(format!("qubit {q} listed twice"));
            }
        }
        if seen.iter().any(|s| !s) {
            return invalid("every qubit must be kept or fixed");
        }
        let base = fixed
            .iter()
            .filter(|&&(_, v)| v)
            .fold(0usize, |acc, &(q, _)| acc | (1 << (self.num_qubits - q)));
        let k = keep.len();
        let amps = (0..1usize << k)
            .map(|local| {
                let index = keep.iter().enumerate().fold(base, |acc, (pos, &q)| {
                    acc | (((local >> (k - 1 - pos)) & 1) << (self.num_qubits - q))
                });
                self.amps[index]
            })
            .collect();
        StateVector::normalized(k, amps)
    }

    /// The Sender's operation σxσz on qubit `i`: σz first, then σx.
    pub fn sender_transform(&mut self, i: usize) -> Result<()> {
        self.apply(i, &Gate2x2::pauli_z())?;
        self.apply(i, &Gate2x2::pauli_x())
    }

    /// Maps a GHZ-frame state into the Φ₀ frame: H then √Z on every qubit.
    pub fn ghz_to_phi_frame(&mut self) {
        self.apply_all(&(Gate2x2::sqrt_z() * Gate2x2::hadamard()));
    }

    /// Inverse of [`ghz_to_phi_frame`](Self::ghz_to_phi_frame).
    pub fn phi_to_ghz_frame(&mut self) {
        self.apply_all(&phi_to_ghz_gate());
    }
}

/// Per-qubit gate taking the Φ₀ frame back to the GHZ frame (√Z† then H).
pub fn phi_to_ghz_gate() -> Gate2x2 {
    Gate2x2::hadamard() * Gate2x2::sqrt_z().adjoint()
}

/// (|0…0⟩ + |1…1⟩)/√2.
pub fn make_ghz(n: usize) -> Result<StateVector> {
    check_qubits(n)?;
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    amps[0] = h;
    amps[(1 << n) - 1] = h;
    Ok(StateVector { num_qubits: n, amps })
}

/// Hamming weight of `y` modulo 4.
pub fn hamming_class(y: usize) -> u32 {
    y.count_ones() % 4
}

/// Φ₀ⁿ (`class_bit = false`) or Φ₁ⁿ (`class_bit = true`): uniform magnitude on
/// strings of Hamming class c, sign + for class c and − for class c + 2.
pub fn make_phi(n: usize, class_bit: bool) -> Result<StateVector> {
    check_qubits(n)?;
    let c = u32::from(class_bit);
    let a = 1.0 / ((1u64 << (n - 1)) as f64).sqrt();
    let amps = (0..1usize << n)
        .map(|y| {
            let h = hamming_class(y);
            if h == c {
                Complex64::new(a, 0.0)
            } else if h == c + 2 {
                Complex64::new(-a, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    Ok(StateVector { num_qubits: n, amps })
}

/// |⟨a|b⟩|².
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr().clamp(0.0, 1.0))
}

/// Trace distance between pure states, √(1 − F).
pub fn trace_distance_pure(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok((1.0 - fidelity(a, b)?).max(0.0).sqrt())
}
