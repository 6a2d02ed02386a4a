//! Cost functions: Pauli-sum Hamiltonians and state infidelity.

use crate::error::{invalid, Error, Result};
use crate::linalg::CMat;
use crate::simcore::{Observable, Pauli, PauliString, StateVector};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Largest register accepted by [`exact_ground_energy`].
pub const MAX_EXACT_QUBITS: usize = 14;
/// Registers up to this size are diagonalized densely; larger ones use Lanczos.
const DENSE_EIGEN_QUBITS: usize = 10;

/// `J Σ Z_i Z_{i+1} + h Σ (Y_i + Z_i)` on `n` sites; `periodic` adds the bond `(n−1, 0)`.
pub fn mixed_field_ising(n: usize, j: f64, h: f64, periodic: bool) -> Result<Observable> {
    if n < 2 {
        return Err(invalid(format!("Ising chain needs n ≥ 2, got {n}")));
    }
    let mut obs = Observable::new(n);
    let bonds = if periodic { n } else { n - 1 };
    for i in 0..bonds {
        let word = PauliString::from_sparse(n, &[(i, Pauli::Z), ((i + 1) % n, Pauli::Z)])?;
        obs.add_term(j, word)?;
    }
    for i in 0..n {
        obs.add_term(h, PauliString::from_sparse(n, &[(i, Pauli::Y)])?)?;
    }
    for i in 0..n {
        obs.add_term(h, PauliString::from_sparse(n, &[(i, Pauli::Z)])?)?;
    }
    Ok(obs)
}

/// `Z` on qubit 0, identity elsewhere.
pub fn local_z_observable(n: usize) -> Result<Observable> {
    if n < 1 {
        return Err(invalid("local Z observable needs at least one qubit"));
    }
    let mut obs = Observable::new(n);
    obs.add_term(1.0, PauliString::from_sparse(n, &[(0, Pauli::Z)])?)?;
    Ok(obs)
}

/// Which scalar a circuit run minimizes.
#[derive(Debug, Clone, PartialEq)]
pub enum Cost {
    Observable(Observable),
    /// `1 − |⟨ψ|target⟩|²`.
    Infidelity(StateVector),
}

pub fn infidelity_cost(target: StateVector) -> Cost {
    Cost::Infidelity(target)
}

impl Cost {
    pub fn num_qubits(&self) -> usize {
        match self {
            Cost::Observable(o) => o.num_qubits(),
            Cost::Infidelity(t) => t.num_qubits(),
        }
    }

    pub fn evaluate(&self, state: &StateVector) -> Result<f64> {
        match self {
            Cost::Observable(o) => state.expectation(o),
            Cost::Infidelity(t) => Ok(1.0 - state.fidelity(t)?),
        }
    }

    /// Dense Hermitian operator whose expectation is the cost.
    pub fn to_matrix(&self) -> CMat {
        match self {
            Cost::Observable(o) => o.to_matrix(),
            Cost::Infidelity(t) => {
                let proj = CMat::outer(t.amplitudes(), t.amplitudes());
                &CMat::identity(t.dim()) - &proj
            }
        }
    }

    pub fn kind(&self) -> CostKind {
        match self {
            Cost::Observable(_) => CostKind::Observable,
            Cost::Infidelity(_) => CostKind::Infidelity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    Observable,
    Infidelity,
}

/// Lowest eigenvalue of `obs`.
pub fn exact_ground_energy(obs: &Observable) -> Result<f64> {
    let n = obs.num_qubits();
    if n > MAX_EXACT_QUBITS {
        return Err(Error::Unsupported(format!(
            "exact ground energy for {n} qubits (limit {MAX_EXACT_QUBITS})"
        )));
    }
    if obs.num_terms() == 0 {
        return Ok(obs.constant());
    }
    if n <= DENSE_EIGEN_QUBITS {
        Ok(dense_min_eigenvalue(&obs.to_matrix()))
    } else {
        lanczos_min_eigenvalue(obs)
    }
}

/// Smallest eigenvalue of a dense Hermitian matrix.
pub fn dense_min_eigenvalue(m: &CMat) -> f64 {
    let dim = m.dim();
    let mat = DMatrix::<Complex64>::from_fn(dim, dim, |r, c| m[(r, c)]);
    SymmetricEigen::new(mat)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Lanczos with full reorthogonalization, driven by the sparse Pauli action.
fn lanczos_min_eigenvalue(obs: &Observable) -> Result<f64> {
    const MAX_KRYLOV: usize = 400;
    const TOL: f64 = 1e-11;
    let dim = 1usize << obs.num_qubits();
    let dot = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    };
    // deterministic, dense start vector
    let mut v: Vec<Complex64> = (0..dim)
        .map(|i| Complex64::new(1.0 + ((i * 7919) % 13) as f64 * 0.01, ((i * 104729) % 17) as f64 * 0.003))
        .collect();
    let norm = dot(&v, &v).re.sqrt();
    v.iter_mut().for_each(|x| *x /= norm);

    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut last = f64::INFINITY;
    for k in 0..MAX_KRYLOV.min(dim) {
        let mut w = obs.apply(&v)?;
        let a = dot(&v, &w).re;
        alpha.push(a);
        basis.push(v.clone());
        for _ in 0..2 {
            for b in &basis {
                let proj = dot(b, &w);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
            }
        }
        let bnorm = dot(&w, &w).re.sqrt();
        let tri = DMatrix::<f64>::from_fn(k + 1, k + 1, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                beta[r]
            } else if c + 1 == r {
                beta[c]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(tri);
        let (imin, lmin) = eig
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, x)| if x < acc.1 { (i, x) } else { acc });
        let residual = bnorm * eig.eigenvectors[(k, imin)].abs();
        if residual < TOL || bnorm < TOL || (last - lmin).abs() < TOL * TOL {
            return Ok(lmin);
        }
        last = lmin;
        beta.push(bnorm);
        v = w.into_iter().map(|x| x / bnorm).collect();
    }
    Ok(last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{pauli_mat2, Mat2, ONE, ZERO};
    use std::f64::consts::FRAC_1_SQRT_2;

    /// Dense Ising matrix assembled from Kronecker products of 2×2 Paulis.
    fn ising_oracle(n: usize, j: f64, h: f64) -> CMat {
        let dim = 1usize << n;
        let op = |ops: &[(usize, Mat2)]| -> CMat {
            let mut m = CMat::identity(dim);
            for (q, p) in ops {
                m = &CMat::embed_single(p, *q, n) * &m;
            }
            m
        };
        let (y, z) = (pauli_mat2(2), pauli_mat2(3));
        let mut h_mat = CMat::zeros(dim);
        for i in 0..n {
            let zz = op(&[(i, z), ((i + 1) % n, z)]);
            h_mat = &h_mat + &zz.scale(Complex64::new(j, 0.0));
            h_mat = &h_mat + &op(&[(i, y)]).scale(Complex64::new(h, 0.0));
            h_mat = &h_mat + &op(&[(i, z)]).scale(Complex64::new(h, 0.0));
        }
        h_mat
    }

    #[test]
    fn ising_term_counts() {
        let obs = mixed_field_ising(5, 1.0, FRAC_1_SQRT_2, true).unwrap();
        assert_eq!(obs.num_terms(), 15);
        let open = mixed_field_ising(5, 1.0, FRAC_1_SQRT_2, false).unwrap();
        assert_eq!(open.num_terms(), 14);
        let two = mixed_field_ising(2, 1.0, 0.0, true).unwrap();
        assert_eq!(two.num_terms(), 1);
        assert_eq!(two.coefficient(&"ZZ".parse().unwrap()), Some(2.0));
        assert!(mixed_field_ising(1, 1.0, 1.0, true).is_err());
    }

    #[test]
    fn ising_matches_kron_oracle() {
        let obs = mixed_field_ising(5, 1.0, FRAC_1_SQRT_2, true).unwrap();
        let oracle = ising_oracle(5, 1.0, FRAC_1_SQRT_2);
        assert!((&obs.to_matrix() - &oracle).frobenius_norm() < 1e-12);
        let zero = StateVector::zero(5);
        let e = zero.expectation(&obs).unwrap();
        assert!((e - oracle[(0, 0)].re).abs() < 1e-12);
        assert!((e - (5.0 + 5.0 * FRAC_1_SQRT_2)).abs() < 1e-12);
    }

    #[test]
    fn local_z_examples() {
        let z1 = local_z_observable(1).unwrap();
        assert_eq!(exact_ground_energy(&z1).unwrap(), -1.0);
        let z3 = local_z_observable(3).unwrap();
        assert_eq!(z3.terms().next().unwrap().1.to_string(), "ZII");
        let s = StateVector::basis(3, 0b001);
        assert_eq!(s.expectation(&z3).unwrap(), -1.0);
    }

    #[test]
    fn ground_energy_examples() {
        let mut zz = Observable::new(2);
        zz.add_str(2.0, "ZZ").unwrap();
        assert!((exact_ground_energy(&zz).unwrap() + 2.0).abs() < 1e-12);
        for n in [1, 4, 11, 12] {
            let e = exact_ground_energy(&local_z_observable(n).unwrap()).unwrap();
            assert!((e + 1.0).abs() < 1e-9, "n={n}: {e}");
        }
        assert!(exact_ground_energy(&local_z_observable(15).unwrap()).is_err());
    }

    #[test]
    fn lanczos_agrees_with_dense() {
        let obs = mixed_field_ising(8, 1.0, FRAC_1_SQRT_2, true).unwrap();
        let dense = dense_min_eigenvalue(&obs.to_matrix());
        let lanczos = lanczos_min_eigenvalue(&obs).unwrap();
        assert!((dense - lanczos).abs() < 1e-9, "{dense} vs {lanczos}");
    }

    #[test]
    fn ising_ground_energy_n5_is_below_all_basis_energies() {
        let obs = mixed_field_ising(5, 1.0, FRAC_1_SQRT_2, true).unwrap();
        let e0 = exact_ground_energy(&obs).unwrap();
        let m = obs.to_matrix();
        let min_diag = (0..32).map(|i| m[(i, i)].re).fold(f64::INFINITY, f64::min);
        assert!(e0 < min_diag);
        assert!(e0 > -(obs.terms().map(|(c, _)| c.abs()).sum::<f64>()));
    }

    #[test]
    fn infidelity_examples() {
        let zero = StateVector::zero(1);
        let cost = infidelity_cost(zero.clone());
        assert_eq!(cost.evaluate(&zero).unwrap(), 0.0);
        assert_eq!(cost.evaluate(&StateVector::basis(1, 1)).unwrap(), 1.0);
        let plus = StateVector::from_amplitudes(vec![ONE * FRAC_1_SQRT_2, ONE * FRAC_1_SQRT_2]).unwrap();
        assert!((cost.evaluate(&plus).unwrap() - 0.5).abs() < 1e-15);
        let proj = cost.to_matrix();
        assert_eq!(proj[(0, 0)], ZERO);
        assert_eq!(proj[(1, 1)], ONE);
        assert!(cost.evaluate(&StateVector::zero(2)).is_err());
    }
}
