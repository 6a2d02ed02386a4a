//! The quadratic-form matrix of a single gate slot and its contractions.
//!
//! For a slot holding the gate with quaternion `q`, the cost is `qᵀ S q` for a
//! real symmetric 4×4 `S`. Fixing the rotation angle at π leaves the 3×3
//! lower-right block; fixing the axis `m` leaves a 2×2 matrix in
//! `(cos ψ/2, sin ψ/2)`.

use crate::circuits::{CircuitTemplate, EvalCounter, ParameterSet, SlotContext, SlotObjective};
use crate::error::{invalid, Error, Result};
use crate::gatealg::{rotation, CARTESIAN_AXES};
use crate::models::Cost;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

const SYMMETRY_TOL: f64 = 1e-10;
const JACOBI_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;
const DEGENERACY_TOL: f64 = 1e-10;

/// Real symmetric `p × p` matrix, `p ∈ {1, …, 4}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMatrix {
    p: usize,
    a: [[f64; 4]; 4],
}

impl SymMatrix {
    /// Builds from rows; rejects ragged, non-finite or asymmetric input and
    /// stores the symmetrized average.
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.len();
        if !(1..=4).contains(&p) || rows.iter().any(|r| r.len() != p) {
            return Err(invalid(format!("expected a square matrix of size 1..=4, got {p} rows")));
        }
        let mut a = [[0.0; 4]; 4];
        let mut asym: f64 = 0.0;
        for i in 0..p {
            for j in 0..p {
                if !rows[i][j].is_finite() {
                    return Err(invalid("matrix entries must be finite"));
                }
                asym = asym.max((rows[i][j] - rows[j][i]).abs());
                a[i][j] = 0.5 * (rows[i][j] + rows[j][i]);
            }
        }
        if asym > SYMMETRY_TOL {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        Ok(Self { p, a })
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        let p = values.len();
        let rows: Vec<Vec<f64>> = (0..p)
            .map(|i| (0..p).map(|j| if i == j { values[i] } else { 0.0 }).collect())
            .collect();
        Self::new(&rows)
    }

    pub fn identity(p: usize) -> Result<Self> {
        Self::diag(&vec![1.0; p])
    }

    fn zeroed(p: usize) -> Self {
        Self { p, a: [[0.0; 4]; 4] }
    }

    fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.a[i][j] = v;
        self.a[j][i] = v;
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.p && j < self.p, "index ({i},{j}) out of range for p={}", self.p);
        self.a[i][j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.p).map(|i| self.a[i][..self.p].to_vec()).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.p).map(|i| self.a[i][i]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        (0..self.p)
            .flat_map(|i| (0..self.p).map(move |j| (i, j)))
            .map(|(i, j)| self.a[i][j] * self.a[i][j])
            .sum::<f64>()
            .sqrt()
    }

    /// `vᵀ S v`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        assert_eq!(v.len(), self.p);
        let mut acc = 0.0;
        for i in 0..self.p {
            for j in 0..self.p {
                acc += v[i] * self.a[i][j] * v[j];
            }
        }
        acc
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.p)
            .map(|i| (0..self.p).map(|j| self.a[i][j] * v[j]).sum())
            .collect()
    }

    /// Principal submatrix on `indices`.
    pub fn submatrix(&self, indices: &[usize]) -> Result<Self> {
        let rows: Vec<Vec<f64>> = indices
            .iter()
            .map(|&i| indices.iter().map(|&j| self.get(i, j)).collect())
            .collect();
        Self::new(&rows)
    }

    /// `[[S₀₀, s·m], [s·m, mᵀ B m]]` where `s` is the first row past the corner
    /// and `B` the lower-right 3×3 block.
    pub fn contract_axis(&self, m: [f64; 3]) -> Result<Self> {
        if self.p != 4 {
            return Err(Error::SizeMismatch { expected: 4, actual: self.p });
        }
        let off: f64 = (0..3).map(|k| self.a[0][k + 1] * m[k]).sum();
        let mut tail = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                tail += m[i] * self.a[i + 1][j + 1] * m[j];
            }
        }
        Self::new(&[vec![self.a[0][0], off], vec![off, tail]])
    }

    /// Eigenvalues and eigenvectors (as columns) by cyclic Jacobi rotations.
    /// Output order follows the basis index each eigenvector grew from.
    pub fn jacobi(&self) -> (Vec<f64>, Vec<Vec<f64>>) {
        let p = self.p;
        let mut a = self.a;
        let mut v = [[0.0; 4]; 4];
        for (i, row) in v.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        let off = |a: &[[f64; 4]; 4]| -> f64 {
            let mut s = 0.0;
            for i in 0..p {
                for j in 0..p {
                    if i != j {
                        s += a[i][j] * a[i][j];
                    }
                }
            }
            s.sqrt()
        };
        for _ in 0..JACOBI_MAX_SWEEPS {
            if off(&a) < JACOBI_TOL {
                break;
            }
            for i in 0..p {
                for j in i + 1..p {
                    if a[i][j] == 0.0 {
                        continue;
                    }
                    let theta = (a[j][j] - a[i][i]) / (2.0 * a[i][j]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..p {
                        let (aki, akj) = (a[k][i], a[k][j]);
                        a[k][i] = c * aki - s * akj;
                        a[k][j] = s * aki + c * akj;
                    }
                    for k in 0..p {
                        let (aik, ajk) = (a[i][k], a[j][k]);
                        a[i][k] = c * aik - s * ajk;
                        a[j][k] = s * aik + c * ajk;
                    }
                    for row in v.iter_mut().take(p) {
                        let (vi, vj) = (row[i], row[j]);
                        row[i] = c * vi - s * vj;
                        row[j] = s * vi + c * vj;
                    }
                }
            }
        }
        let values = (0..p).map(|i| a[i][i]).collect();
        let vectors = (0..p).map(|c| (0..p).map(|r| v[r][c]).collect()).collect();
        (values, vectors)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.jacobi().0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigPair {
    pub value: f64,
    pub vector: Vec<f64>,
}

/// Lowest eigenvalue and a unit eigenvector.
///
/// Among eigenvalues within 1e-10 of the minimum the one with the lowest
/// solver index wins; the vector's first component above 1e-12 in magnitude
/// is made positive.
pub fn min_eigenpair(s: &SymMatrix) -> EigPair {
    let (values, vectors) = s.jacobi();
    let lowest = values.iter().copied().fold(f64::INFINITY, f64::min);
    let idx = values
        .iter()
        .position(|&x| x <= lowest + DEGENERACY_TOL)
        .expect("non-empty spectrum");
    let mut vector = vectors[idx].clone();
    let norm = vector.iter().map(|x| x * x).sum::<f64>().sqrt();
    vector.iter_mut().for_each(|x| *x /= norm);
    if let Some(first) = vector.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            vector.iter_mut().for_each(|x| *x = -*x);
        }
    }
    EigPair {
        value: values[idx],
        vector,
    }
}

/// `S − (tr S / p)·I`.
pub fn centered(s: &SymMatrix) -> SymMatrix {
    let shift = s.trace() / s.p as f64;
    let mut out = *s;
    for i in 0..s.p {
        out.a[i][i] -= shift;
    }
    out
}

/// Largest eigenvalue magnitude.
pub fn spectral_radius(s: &SymMatrix) -> f64 {
    s.eigenvalues().iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn eval_rotation<O: SlotObjective + ?Sized>(obj: &O, axis: [f64; 3], psi: f64, counter: &mut EvalCounter) -> Result<f64> {
    obj.energy_with(&rotation(axis, psi)?.to_matrix(), counter)
}

const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

fn pair_axis(i: usize, j: usize) -> [f64; 3] {
    let mut axis = [0.0; 3];
    axis[i] = FRAC_1_SQRT_2;
    axis[j] = FRAC_1_SQRT_2;
    axis
}

/// Off-diagonals of the 3×3 block from the three mixed-axis π rotations.
fn fill_mixed<O: SlotObjective + ?Sized>(
    obj: &O,
    s: &mut SymMatrix,
    offset: usize,
    counter: &mut EvalCounter,
) -> Result<()> {
    for (i, j) in PAIRS {
        let e = eval_rotation(obj, pair_axis(i, j), PI, counter)?;
        let (a, b) = (i + offset, j + offset);
        let v = e - 0.5 * (s.a[a][a] + s.a[b][b]);
        s.set_sym(a, b, v);
    }
    Ok(())
}

/// Full 4×4 matrix from 10 evaluations.
pub fn fqs_matrix_from<O: SlotObjective + ?Sized>(obj: &O, counter: &mut EvalCounter) -> Result<SymMatrix> {
    let mut s = SymMatrix::zeroed(4);
    let s00 = obj.energy_with(&crate::linalg::mat2_identity(), counter)?;
    s.a[0][0] = s00;
    for (k, axis) in CARTESIAN_AXES.iter().enumerate() {
        let minus = eval_rotation(obj, *axis, -FRAC_PI_2, counter)?;
        let plus = eval_rotation(obj, *axis, FRAC_PI_2, counter)?;
        s.a[k + 1][k + 1] = plus + minus - s00;
        s.set_sym(0, k + 1, 0.5 * (plus - minus));
    }
    fill_mixed(obj, &mut s, 1, counter)?;
    Ok(s)
}

/// 3×3 axis matrix at fixed angle π from 6 evaluations.
pub fn fraxis_matrix_from<O: SlotObjective + ?Sized>(obj: &O, counter: &mut EvalCounter) -> Result<SymMatrix> {
    let mut s = SymMatrix::zeroed(3);
    for (k, axis) in CARTESIAN_AXES.iter().enumerate() {
        s.a[k][k] = eval_rotation(obj, *axis, PI, counter)?;
    }
    fill_mixed(obj, &mut s, 0, counter)?;
    Ok(s)
}

fn check_unit_axis(axis: [f64; 3]) -> Result<()> {
    let norm = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !((norm - 1.0).abs() < 1e-9) {
        return Err(invalid(format!("axis {axis:?} is not a unit vector (|m| = {norm})")));
    }
    Ok(())
}

fn nft_from_values(s00: f64, plus: f64, minus: f64) -> SymMatrix {
    let mut s = SymMatrix::zeroed(2);
    s.a[0][0] = s00;
    s.a[1][1] = plus + minus - s00;
    s.set_sym(0, 1, 0.5 * (plus - minus));
    s
}

/// 2×2 angle matrix for a fixed axis from 3 evaluations.
pub fn nft_matrix_from<O: SlotObjective + ?Sized>(
    obj: &O,
    axis: [f64; 3],
    counter: &mut EvalCounter,
) -> Result<SymMatrix> {
    check_unit_axis(axis)?;
    let s00 = obj.energy_with(&crate::linalg::mat2_identity(), counter)?;
    let minus = eval_rotation(obj, axis, -FRAC_PI_2, counter)?;
    let plus = eval_rotation(obj, axis, FRAC_PI_2, counter)?;
    Ok(nft_from_values(s00, plus, minus))
}

/// The x, y and z angle matrices sharing one identity evaluation (7 in total).
pub fn rotoselect_matrices_from<O: SlotObjective + ?Sized>(
    obj: &O,
    counter: &mut EvalCounter,
) -> Result<[SymMatrix; 3]> {
    let s00 = obj.energy_with(&crate::linalg::mat2_identity(), counter)?;
    let mut out = [SymMatrix::zeroed(2); 3];
    for (k, axis) in CARTESIAN_AXES.iter().enumerate() {
        let minus = eval_rotation(obj, *axis, -FRAC_PI_2, counter)?;
        let plus = eval_rotation(obj, *axis, FRAC_PI_2, counter)?;
        out[k] = nft_from_values(s00, plus, minus);
    }
    Ok(out)
}

pub fn build_fqs_matrix(
    template: &CircuitTemplate,
    params: &ParameterSet,
    slot: usize,
    cost: &Cost,
    counter: &mut EvalCounter,
) -> Result<SymMatrix> {
    fqs_matrix_from(&SlotContext::new(template, params, slot, cost)?, counter)
}

pub fn build_fraxis_matrix(
    template: &CircuitTemplate,
    params: &ParameterSet,
    slot: usize,
    cost: &Cost,
    counter: &mut EvalCounter,
) -> Result<SymMatrix> {
    fraxis_matrix_from(&SlotContext::new(template, params, slot, cost)?, counter)
}

pub fn build_nft_matrix(
    template: &CircuitTemplate,
    params: &ParameterSet,
    slot: usize,
    axis: [f64; 3],
    cost: &Cost,
    counter: &mut EvalCounter,
) -> Result<SymMatrix> {
    check_unit_axis(axis)?;
    nft_matrix_from(&SlotContext::new(template, params, slot, cost)?, axis, counter)
}
