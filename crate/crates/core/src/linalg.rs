//! Small dense complex matrices.
//!
//! Gates use the fixed-size [`Mat2`]. Everything wider (two-qubit gates,
//! Haar unitaries, dense operators for the bound evaluators) uses [`CMat`],
//! a row-major square matrix.

use num_complex::Complex64;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// 2×2 complex matrix, `m[row][col]`.
pub type Mat2 = [[Complex64; 2]; 2];

pub fn mat2_identity() -> Mat2 {
    [[ONE, ZERO], [ZERO, ONE]]
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

pub fn mat2_adjoint(a: &Mat2) -> Mat2 {
    [
        [a[0][0].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[1][1].conj()],
    ]
}

pub fn mat2_det(a: &Mat2) -> Complex64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

/// Dense square complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    dim: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major data. Panics if `data.len()` is not a square.
    pub fn from_vec(dim: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), dim * dim, "CMat::from_vec: length is not dim²");
        Self { dim, data }
    }

    pub fn from_mat2(m: &Mat2) -> Self {
        Self::from_vec(2, vec![m[0][0], m[0][1], m[1][0], m[1][1]])
    }

    /// Returns the 2×2 block if this is a 2×2 matrix.
    pub fn to_mat2(&self) -> Option<Mat2> {
        (self.dim == 2).then(|| [[self.data[0], self.data[1]], [self.data[2], self.data[3]]])
    }

    /// Outer product `|a⟩⟨b|`.
    pub fn outer(a: &[Complex64], b: &[Complex64]) -> Self {
        assert_eq!(a.len(), b.len());
        let dim = a.len();
        let mut m = Self::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                m[(r, c)] = a[r] * b[c].conj();
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for c in 0..n {
                out[(c, r)] = self[(r, c)].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖U†U − I‖_F`.
    pub fn unitarity_deviation(&self) -> f64 {
        (&(&self.adjoint() * self) - &Self::identity(self.dim)).frobenius_norm()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        (self - &self.adjoint()).frobenius_norm()
    }

    /// Kronecker product `self ⊗ rhs`; `rhs` occupies the low-order index bits.
    pub fn kron(&self, rhs: &CMat) -> CMat {
        let (da, db) = (self.dim, rhs.dim);
        let mut out = CMat::zeros(da * db);
        for ar in 0..da {
            for ac in 0..da {
                let a = self[(ar, ac)];
                if a == ZERO {
                    continue;
                }
                for br in 0..db {
                    for bc in 0..db {
                        out[(ar * db + br, ac * db + bc)] = a * rhs[(br, bc)];
                    }
                }
            }
        }
        out
    }

    /// Embeds a single-qubit operator on `qubit` of an `n`-qubit register
    /// (qubit 0 is the least-significant index bit).
    pub fn embed_single(op: &Mat2, qubit: usize, n: usize) -> CMat {
        let dim = 1usize << n;
        let mask = 1usize << qubit;
        let mut out = CMat::zeros(dim);
        for col in 0..dim {
            let b = (col & mask != 0) as usize;
            let base = col & !mask;
            for a in 0..2 {
                let v = op[a][b];
                if v != ZERO {
                    out[(base | (a * mask), col)] = v;
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|r| {
                self.data[r * self.dim..(r + 1) * self.dim]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `tr(self · rhs)` without forming the product.
    pub fn trace_product(&self, rhs: &CMat) -> Complex64 {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut acc = ZERO;
        for r in 0..n {
            for k in 0..n {
                acc += self[(r, k)] * rhs[(k, r)];
            }
        }
        acc
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.dim + c]
    }
}

impl Mul for &CMat {
    type Output = CMat;
    fn mul(self, rhs: &CMat) -> CMat {
        assert_eq!(self.dim, rhs.dim, "CMat product: dimension mismatch");
        let n = self.dim;
        let mut out = CMat::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                let dst = &mut out.data[r * n..(r + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }
}

impl Add for &CMat {
    type Output = CMat;
    fn add(self, rhs: &CMat) -> CMat {
        assert_eq!(self.dim, rhs.dim);
        CMat {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMat {
    type Output = CMat;
    fn sub(self, rhs: &CMat) -> CMat {
        assert_eq!(self.dim, rhs.dim);
        CMat {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Pauli matrices, indexed I, X, Y, Z.
pub fn pauli_mat2(index: usize) -> Mat2 {
    match index {
        0 => [[ONE, ZERO], [ZERO, ONE]],
        1 => [[ZERO, ONE], [ONE, ZERO]],
        2 => [[ZERO, -I], [I, ZERO]],
        3 => [[ONE, ZERO], [ZERO, -ONE]],
        _ => panic!("pauli index {index} out of range"),
    }
}

/// Reduced density matrix of a pure state on `keep` (listed low bit first).
pub fn reduced_density(amplitudes: &[Complex64], keep: &[usize]) -> CMat {
    let n = amplitudes.len().trailing_zeros() as usize;
    let k = keep.len();
    let dim = 1usize << k;
    let keep_mask: usize = keep.iter().map(|q| 1usize << q).sum();
    let rest: Vec<usize> = (0..n).filter(|q| keep_mask & (1 << q) == 0).collect();
    let spread = |local: usize, qubits: &[usize]| -> usize {
        qubits
            .iter()
            .enumerate()
            .filter(|(i, _)| local & (1 << i) != 0)
            .map(|(_, q)| 1usize << q)
            .sum()
    };
    let keep_idx: Vec<usize> = (0..dim).map(|l| spread(l, keep)).collect();
    let mut rho = CMat::zeros(dim);
    for env in 0..(1usize << rest.len()) {
        let e = spread(env, &rest);
        for r in 0..dim {
            let ar = amplitudes[e | keep_idx[r]];
            if ar == ZERO {
                continue;
            }
            for c in 0..dim {
                rho[(r, c)] += ar * amplitudes[e | keep_idx[c]].conj();
            }
        }
    }
    rho
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_places_rhs_in_low_bits() {
        let x = CMat::from_mat2(&pauli_mat2(1));
        let id = CMat::identity(2);
        // X on qubit 0 of two qubits = I ⊗ X
        let a = id.kron(&x);
        let b = CMat::embed_single(&pauli_mat2(1), 0, 2);
        assert_eq!(a, b);
        assert_eq!(a[(1, 0)], ONE);
        assert_eq!(a[(3, 2)], ONE);
    }

    #[test]
    fn reduced_density_of_product_state() {
        // |ψ⟩ = |1⟩_q0 ⊗ |0⟩_q1 -> index 1
        let mut amps = vec![ZERO; 4];
        amps[1] = ONE;
        let rho0 = reduced_density(&amps, &[0]);
        assert_eq!(rho0[(1, 1)], ONE);
        assert_eq!(rho0[(0, 0)], ZERO);
        let rho1 = reduced_density(&amps, &[1]);
        assert_eq!(rho1[(0, 0)], ONE);
    }

    #[test]
    fn reduced_density_of_bell_pair_is_mixed() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let amps = vec![Complex64::new(s, 0.0), ZERO, ZERO, Complex64::new(s, 0.0)];
        let rho = reduced_density(&amps, &[1]);
        assert!((rho[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!(rho[(0, 1)].norm() < 1e-15);
    }
}
