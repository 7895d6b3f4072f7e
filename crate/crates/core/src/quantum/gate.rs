use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::Mul;

use num_complex::Complex64;

use crate::error::{invalid, Result};

const UNITARY_TOL: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// A single-qubit unitary, stored row-major.
///
/// Construction through [`Gate2x2::new`] checks unitarity, so every gate that
/// reaches a state vector is unitary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gate2x2 {
    m: [[Complex64; 2]; 2],
}

impl Gate2x2 {
    pub fn new(m: [[Complex64; 2]; 2]) -> Result<Self> {
        let g = Gate2x2 { m };
        let p = g.adjoint() * g;
        let dev = (p.m[0][0] - ONE).norm()
            + (p.m[1][1] - ONE).norm()
            + p.m[0][1].norm()
            + p.m[1][0].norm();
        if !dev.is_finite() || dev > UNITARY_TOL {
            return invalid(format!("gate is not unitary (deviation {dev:.3e})"));
        }
        Ok(g)
    }

    pub fn identity() -> Self {
        Gate2x2 { m: [[ONE, ZERO], [ZERO, ONE]] }
    }

    pub fn hadamard() -> Self {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Gate2x2 { m: [[h, h], [h, -h]] }
    }

    pub fn pauli_x() -> Self {
        Gate2x2 { m: [[ZERO, ONE], [ONE, ZERO]] }
    }

    pub fn pauli_y() -> Self {
        Gate2x2 { m: [[ZERO, -I], [I, ZERO]] }
    }

    pub fn pauli_z() -> Self {
        Gate2x2 { m: [[ONE, ZERO], [ZERO, -ONE]] }
    }

    /// √Z = diag(1, i).
    pub fn sqrt_z() -> Self {
        Gate2x2 { m: [[ONE, ZERO], [ZERO, I]] }
    }

    /// diag(1, e^{iφ}).
    pub fn phase(phi: f64) -> Self {
        Gate2x2 { m: [[ONE, ZERO], [ZERO, Complex64::from_polar(1.0, phi)]] }
    }

    /// Rotation e^{-iθ/2 (n·σ)} about the unit axis `axis`.
    pub fn rotation(axis: [f64; 3], theta: f64) -> Result<Self> {
        let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return invalid("rotation axis must be non-zero");
        }
        let [x, y, z] = axis.map(|a| a / norm);
        let (s, c) = (theta / 2.0).sin_cos();
        let c = Complex64::new(c, 0.0);
        Ok(Gate2x2 {
            m: [
                [c - I * s * z, (-I * x - y) * s],
                [(-I * x + y) * s, c + I * s * z],
            ],
        })
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.m[row][col]
    }

    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        self.m
    }

    pub fn adjoint(&self) -> Self {
        let m = self.m;
        Gate2x2 { m: [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]] }
    }
}

impl Mul for Gate2x2 {
    type Output = Gate2x2;

    /// Operator product: `(a * b)` applies `b` first.
    fn mul(self, rhs: Gate2x2) -> Gate2x2 {
        let (a, b) = (self.m, rhs.m);
        let mut m = [[ZERO; 2]; 2];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Gate2x2 { m }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Gate2x2, b: Gate2x2) -> bool {
        (0..2).all(|r| (0..2).all(|c| (a.entry(r, c) - b.entry(r, c)).norm() < 1e-12))
    }

    #[test]
    fn rejects_non_unitary() {
        let m = [[ONE, ONE], [ZERO, ONE]];
        assert!(Gate2x2::new(m).is_err());
        assert!(Gate2x2::new(Gate2x2::hadamard().matrix()).is_ok());
    }

    #[test]
    fn xz_squared_is_minus_identity() {
        let xz = Gate2x2::pauli_x() * Gate2x2::pauli_z();
        let sq = xz * xz;
        let minus_i = Gate2x2 { m: [[-ONE, ZERO], [ZERO, -ONE]] };
        assert!(close(sq, minus_i));
    }

    #[test]
    fn sqrt_z_squares_to_z() {
        assert!(close(Gate2x2::sqrt_z() * Gate2x2::sqrt_z(), Gate2x2::pauli_z()));
    }

    #[test]
    fn rotations_are_unitary() {
        let g = Gate2x2::rotation([0.3, -1.2, 0.7], 2.1).unwrap();
        assert!(Gate2x2::new(g.matrix()).is_ok());
        assert!(Gate2x2::rotation([0.0; 3], 1.0).is_err());
    }
}
