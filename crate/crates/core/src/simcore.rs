//! Dense statevector simulation and Pauli-sum expectation values.
//!
//! Qubit 0 is the least-significant bit of the amplitude index throughout the
//! crate. Pauli words are written with qubit 0 first, so `"ZII"` is Z on
//! qubit 0 of a three-qubit register.

use crate::error::{invalid, Error, Result};
use crate::linalg::{CMat, Mat2, ONE, ZERO};
use num_complex::Complex64;
use std::fmt;
use std::str::FromStr;

const NORM_TOL: f64 = 1e-10;
const UNITARY_TOL: f64 = 1e-8;
const IMAG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Self {
        Self::basis(num_qubits, 0)
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(num_qubits: usize, index: usize) -> Self {
        assert!(num_qubits >= 1, "a register needs at least one qubit");
        let dim = 1usize << num_qubits;
        assert!(index < dim, "basis index {index} out of range");
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Self {
            num_qubits,
            amplitudes,
        }
    }

    /// Wraps an amplitude vector, rejecting wrong lengths and non-normalized input.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(invalid(format!(
                "amplitude vector length {len} is not a power of two ≥ 2"
            )));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(invalid(format!("state is not normalized (Σ|a|² = {norm})")));
        }
        Ok(Self {
            num_qubits: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    /// Normalizes an arbitrary non-zero vector into a state.
    pub fn from_unnormalized(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(invalid("cannot normalize a zero or non-finite vector"));
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Self::from_amplitudes(amplitudes)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        check_same_size(self, other)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.num_qubits {
            return Err(Error::QubitOutOfRange {
                index: q,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    /// Applies a one- or two-qubit unitary to `targets`.
    ///
    /// For two targets the 4×4 matrix is indexed by `b0 + 2·b1`, where `b0` is
    /// the bit of `targets[0]`.
    pub fn apply_gate(&mut self, targets: &[usize], unitary: &CMat) -> Result<()> {
        for &t in targets {
            self.check_qubit(t)?;
        }
        let expected_dim = 1usize << targets.len();
        if !(1..=2).contains(&targets.len()) {
            return Err(Error::Unsupported(format!(
                "{}-qubit gates (only 1- and 2-qubit gates are supported)",
                targets.len()
            )));
        }
        if unitary.dim() != expected_dim {
            return Err(Error::SizeMismatch {
                expected: expected_dim,
                actual: unitary.dim(),
            });
        }
        if targets.len() == 2 && targets[0] == targets[1] {
            return Err(Error::DuplicateTarget(targets.to_vec()));
        }
        let deviation = unitary.unitarity_deviation();
        if !(deviation <= UNITARY_TOL) {
            return Err(Error::NonUnitary { deviation });
        }
        match targets {
            [q] => self.apply_mat2(*q, &unitary.to_mat2().expect("2×2")),
            [a, b] => self.apply_two_qubit(*a, *b, unitary),
            _ => unreachable!(),
        }
        Ok(())
    }

    /// Unchecked single-qubit gate application (hot path for circuit evaluation).
    pub(crate) fn apply_mat2(&mut self, qubit: usize, m: &Mat2) {
        let stride = 1usize << qubit;
        let dim = self.amplitudes.len();
        let amps = &mut self.amplitudes;
        let mut base = 0;
        while base < dim {
            for i in base..base + stride {
                let a0 = amps[i];
                let a1 = amps[i + stride];
                amps[i] = m[0][0] * a0 + m[0][1] * a1;
                amps[i + stride] = m[1][0] * a0 + m[1][1] * a1;
            }
            base += 2 * stride;
        }
    }

    pub(crate) fn apply_two_qubit(&mut self, q0: usize, q1: usize, m: &CMat) {
        let (m0, m1) = (1usize << q0, 1usize << q1);
        let dim = self.amplitudes.len();
        for base in 0..dim {
            if base & (m0 | m1) != 0 {
                continue;
            }
            let idx = [base, base | m0, base | m1, base | m0 | m1];
            let v = idx.map(|i| self.amplitudes[i]);
            for (r, &i) in idx.iter().enumerate() {
                self.amplitudes[i] = (0..4).map(|c| m[(r, c)] * v[c]).sum();
            }
        }
    }

    /// Controlled-Z; symmetric in its arguments.
    pub(crate) fn apply_cz(&mut self, a: usize, b: usize) {
        let mask = (1usize << a) | (1usize << b);
        for (i, amp) in self.amplitudes.iter_mut().enumerate() {
            if i & mask == mask {
                *amp = -*amp;
            }
        }
    }

    /// Raw `⟨ψ|P|ψ⟩` for one Pauli word (complex before the Hermiticity check).
    fn pauli_expectation_raw(&self, word: &PauliString) -> Complex64 {
        let (x_mask, z_mask, y_count) = word.masks();
        // P = i^{#Y} X^{x_mask} Z^{z_mask}
        let phase = match y_count % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        let mut acc = ZERO;
        for (x, &amp) in self.amplitudes.iter().enumerate() {
            if amp == ZERO {
                continue;
            }
            let sign = if (x & z_mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            acc += self.amplitudes[x ^ x_mask].conj() * amp * sign;
        }
        acc * phase
    }

    /// `c₀ + Σ cᵢ⟨ψ|hᵢ|ψ⟩`.
    pub fn expectation(&self, obs: &Observable) -> Result<f64> {
        let mut total = obs.constant();
        for (coef, word) in obs.terms() {
            if word.len() != self.num_qubits {
                return Err(Error::SizeMismatch {
                    expected: self.num_qubits,
                    actual: word.len(),
                });
            }
            let raw = self.pauli_expectation_raw(word);
            if raw.im.abs() > IMAG_TOL {
                return Err(invalid(format!(
                    "Pauli expectation has imaginary residue {:.3e}",
                    raw.im
                )));
            }
            total += coef * raw.re;
        }
        Ok(total)
    }

    /// `|⟨self|target⟩|²`.
    pub fn fidelity(&self, target: &StateVector) -> Result<f64> {
        Ok(self.inner(target)?.norm_sqr())
    }
}

fn check_same_size(a: &StateVector, b: &StateVector) -> Result<()> {
    if a.num_qubits != b.num_qubits {
        return Err(Error::SizeMismatch {
            expected: a.num_qubits,
            actual: b.num_qubits,
        });
    }
    Ok(())
}

/// `|⟨state|target⟩|²`.
pub fn fidelity(state: &StateVector, target: &StateVector) -> Result<f64> {
    state.fidelity(target)
}

/// Free-function form of [`StateVector::expectation`].
pub fn expectation(state: &StateVector, obs: &Observable) -> Result<f64> {
    state.expectation(obs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> Mat2 {
        crate::linalg::pauli_mat2(self as usize)
    }

    fn to_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Phase-free tensor product of Paulis, one letter per qubit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    letters: Vec<Pauli>,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Self {
        Self { letters }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(vec![Pauli::I; n])
    }

    /// Word with the given letters placed on the listed qubits and identity elsewhere.
    pub fn from_sparse(n: usize, ops: &[(usize, Pauli)]) -> Result<Self> {
        let mut letters = vec![Pauli::I; n];
        for &(q, p) in ops {
            if q >= n {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    num_qubits: n,
                });
            }
            letters[q] = p;
        }
        Ok(Self { letters })
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&p| p == Pauli::I)
    }

    /// Qubits carrying a non-identity letter.
    pub fn support(&self) -> Vec<usize> {
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != Pauli::I)
            .map(|(q, _)| q)
            .collect()
    }

    fn masks(&self) -> (usize, usize, u32) {
        let mut x = 0usize;
        let mut z = 0usize;
        let mut y = 0u32;
        for (q, p) in self.letters.iter().enumerate() {
            match p {
                Pauli::I => {}
                Pauli::X => x |= 1 << q,
                Pauli::Z => z |= 1 << q,
                Pauli::Y => {
                    x |= 1 << q;
                    z |= 1 << q;
                    y += 1;
                }
            }
        }
        (x, z, y)
    }

    /// Dense `2^n × 2^n` matrix of the word.
    pub fn to_matrix(&self) -> CMat {
        let n = self.letters.len();
        let dim = 1usize << n;
        let (x_mask, z_mask, y_count) = self.masks();
        let phase = Complex64::new(0.0, 1.0).powu(y_count);
        let mut m = CMat::zeros(dim);
        for col in 0..dim {
            let sign = if (col & z_mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            m[(col ^ x_mask, col)] = phase * sign;
        }
        m
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.letters {
            write!(f, "{}", p.to_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c.to_ascii_uppercase() {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(invalid(format!("unknown Pauli letter {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(PauliString::new)
    }
}

/// Real-weighted Pauli sum `c₀·I + Σ cᵢ hᵢ` on a fixed register size.
///
/// Duplicate words are merged on insertion; identity words fold into the
/// constant and terms whose merged coefficient is exactly zero are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    num_qubits: usize,
    constant: f64,
    terms: Vec<(f64, PauliString)>,
}

impl Observable {
    pub fn new(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            constant: 0.0,
            terms: Vec::new(),
        }
    }

    pub fn with_constant(mut self, c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(invalid("constant must be finite"));
        }
        self.constant = c;
        Ok(self)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn terms(&self) -> impl Iterator<Item = (f64, &PauliString)> {
        self.terms.iter().map(|(c, w)| (*c, w))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, word: &PauliString) -> Option<f64> {
        self.terms.iter().find(|(_, w)| w == word).map(|(c, _)| *c)
    }

    pub fn add_term(&mut self, coef: f64, word: PauliString) -> Result<()> {
        if !coef.is_finite() {
            return Err(invalid("coefficients must be finite"));
        }
        if word.len() != self.num_qubits {
            return Err(Error::SizeMismatch {
                expected: self.num_qubits,
                actual: word.len(),
            });
        }
        if word.is_identity() {
            self.constant += coef;
            return Ok(());
        }
        if let Some(pos) = self.terms.iter().position(|(_, w)| *w == word) {
            self.terms[pos].0 += coef;
            if self.terms[pos].0 == 0.0 {
                self.terms.remove(pos);
            }
        } else if coef != 0.0 {
            self.terms.push((coef, word));
        }
        Ok(())
    }

    pub fn add_str(&mut self, coef: f64, word: &str) -> Result<()> {
        self.add_term(coef, word.parse()?)
    }

    /// `α·self + β·other`.
    pub fn linear_combination(&self, alpha: f64, other: &Observable, beta: f64) -> Result<Self> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::SizeMismatch {
                expected: self.num_qubits,
                actual: other.num_qubits,
            });
        }
        let mut out = Observable::new(self.num_qubits);
        out.constant = alpha * self.constant + beta * other.constant;
        for (c, w) in &self.terms {
            out.add_term(alpha * c, w.clone())?;
        }
        for (c, w) in &other.terms {
            out.add_term(beta * c, w.clone())?;
        }
        Ok(out)
    }

    /// Dense Hermitian matrix of the observable.
    pub fn to_matrix(&self) -> CMat {
        let dim = 1usize << self.num_qubits;
        let mut m = CMat::identity(dim).scale(Complex64::new(self.constant, 0.0));
        for (c, w) in &self.terms {
            m = &m + &w.to_matrix().scale(Complex64::new(*c, 0.0));
        }
        m
    }

    /// `H|v⟩` without forming the matrix.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        let dim = 1usize << self.num_qubits;
        if v.len() != dim {
            return Err(Error::SizeMismatch {
                expected: dim,
                actual: v.len(),
            });
        }
        let mut out: Vec<Complex64> = v.iter().map(|x| x * self.constant).collect();
        for (coef, word) in &self.terms {
            let (x_mask, z_mask, y_count) = word.masks();
            let phase = Complex64::new(0.0, 1.0).powu(y_count) * coef;
            for (x, amp) in v.iter().enumerate() {
                let sign = if (x & z_mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                out[x ^ x_mask] += phase * sign * amp;
            }
        }
        Ok(out)
    }

    /// `tr H` over the full register.
    pub fn trace(&self) -> f64 {
        self.constant * (1u64 << self.num_qubits) as f64
    }

    /// `tr H²`; distinct Pauli words are trace-orthogonal.
    pub fn trace_sq(&self) -> f64 {
        let dim = (1u64 << self.num_qubits) as f64;
        dim * (self.constant * self.constant + self.terms.iter().map(|(c, _)| c * c).sum::<f64>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pauli_mat2;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn hadamard() -> CMat {
        CMat::from_vec(
            2,
            vec![c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2), c(-FRAC_1_SQRT_2)],
        )
    }

    fn cz() -> CMat {
        let mut m = CMat::identity(4);
        m[(3, 3)] = c(-1.0);
        m
    }

    /// Dense operator of a word built by multiplying embedded 2×2 Paulis.
    fn kron_oracle(word: &PauliString) -> CMat {
        let n = word.len();
        word.letters()
            .iter()
            .enumerate()
            .fold(CMat::identity(1 << n), |m, (q, p)| &CMat::embed_single(&p.matrix(), q, n) * &m)
    }

    #[test]
    fn word_matrix_matches_kron_oracle() {
        for w in ["XYZ", "YYI", "IZY", "XXX", "YZX"] {
            let word: PauliString = w.parse().unwrap();
            assert!((&word.to_matrix() - &kron_oracle(&word)).frobenius_norm() < 1e-15, "{w}");
        }
    }

    #[test]
    fn apply_matches_dense_matrix() {
        let mut o = Observable::new(3);
        o.add_str(0.7, "XYZ").unwrap();
        o.add_str(-1.3, "YIY").unwrap();
        o.add_str(0.2, "III").unwrap();
        let v: Vec<Complex64> = (0..8).map(|i| Complex64::new(i as f64 * 0.1, 1.0 - i as f64 * 0.05)).collect();
        let dense = o.to_matrix().apply(&v);
        for (a, b) in o.apply(&v).unwrap().iter().zip(&dense) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn x_flips_zero_to_one() {
        let mut s = StateVector::zero(1);
        s.apply_gate(&[0], &CMat::from_mat2(&pauli_mat2(1))).unwrap();
        assert_eq!(s.amplitudes(), &[ZERO, ONE]);
    }

    #[test]
    fn cz_phases_one_one() {
        let mut s = StateVector::basis(2, 3);
        s.apply_gate(&[0, 1], &cz()).unwrap();
        assert_eq!(s.amplitudes()[3], c(-1.0));
        let mut t = StateVector::basis(2, 3);
        t.apply_cz(1, 0);
        assert_eq!(s, t);
    }

    #[test]
    fn hadamard_on_zero() {
        let mut s = StateVector::zero(1);
        s.apply_gate(&[0], &hadamard()).unwrap();
        for a in s.amplitudes() {
            assert!((a - c(FRAC_1_SQRT_2)).norm() < 1e-15);
        }
    }

    #[test]
    fn two_qubit_gate_uses_first_target_as_low_bit() {
        // CNOT with control = targets[0], target = targets[1]
        let mut cnot = CMat::zeros(4);
        cnot[(0, 0)] = ONE;
        cnot[(3, 1)] = ONE;
        cnot[(2, 2)] = ONE;
        cnot[(1, 3)] = ONE;
        let mut s = StateVector::basis(3, 0b100); // qubit 2 set
        s.apply_gate(&[2, 0], &cnot).unwrap();
        assert_eq!(s.amplitudes()[0b101], ONE);
    }

    #[test]
    fn gate_errors() {
        let mut s = StateVector::zero(2);
        let x = CMat::from_mat2(&pauli_mat2(1));
        assert!(matches!(
            s.apply_gate(&[2], &x),
            Err(Error::QubitOutOfRange { index: 2, .. })
        ));
        assert!(matches!(s.apply_gate(&[1, 1], &cz()), Err(Error::DuplicateTarget(_))));
        let bad = CMat::from_vec(2, vec![ONE, ONE, ZERO, ONE]);
        assert!(matches!(s.apply_gate(&[0], &bad), Err(Error::NonUnitary { .. })));
        assert!(matches!(s.apply_gate(&[0], &cz()), Err(Error::SizeMismatch { .. })));
    }

    #[test]
    fn basic_expectations() {
        let z: Observable = {
            let mut o = Observable::new(1);
            o.add_str(1.0, "Z").unwrap();
            o
        };
        assert_eq!(StateVector::zero(1).expectation(&z).unwrap(), 1.0);
        let mut plus = StateVector::zero(1);
        plus.apply_gate(&[0], &hadamard()).unwrap();
        let mut x = Observable::new(1);
        x.add_str(1.0, "X").unwrap();
        assert!((plus.expectation(&x).unwrap() - 1.0).abs() < 1e-15);
        let mut wrong = Observable::new(2);
        wrong.add_str(1.0, "ZZ").unwrap();
        assert!(matches!(plus.expectation(&wrong), Err(Error::SizeMismatch { .. })));
    }

    #[test]
    fn fidelity_examples() {
        let zero = StateVector::zero(1);
        let one = StateVector::basis(1, 1);
        let mut plus = StateVector::zero(1);
        plus.apply_gate(&[0], &hadamard()).unwrap();
        assert_eq!(zero.fidelity(&zero).unwrap(), 1.0);
        assert_eq!(zero.fidelity(&one).unwrap(), 0.0);
        assert!((plus.fidelity(&zero).unwrap() - 0.5).abs() < 1e-15);
        assert!(zero.fidelity(&StateVector::zero(2)).is_err());
    }

    #[test]
    fn observable_merges_and_folds() {
        let mut o = Observable::new(2);
        o.add_str(1.0, "ZZ").unwrap();
        o.add_str(1.0, "ZZ").unwrap();
        o.add_str(0.5, "II").unwrap();
        assert_eq!(o.num_terms(), 1);
        assert_eq!(o.coefficient(&"ZZ".parse().unwrap()), Some(2.0));
        assert_eq!(o.constant(), 0.5);
        o.add_str(-2.0, "ZZ").unwrap();
        assert_eq!(o.num_terms(), 0);
        assert!(o.add_term(f64::NAN, "XX".parse().unwrap()).is_err());
    }

    #[test]
    fn pauli_string_parse_and_display() {
        let w: PauliString = "xIyZ".parse().unwrap();
        assert_eq!(w.to_string(), "XIYZ");
        assert_eq!(w.support(), vec![0, 2, 3]);
        assert!("XQ".parse::<PauliString>().is_err());
    }

    #[test]
    fn from_amplitudes_rejects_bad_input() {
        assert!(StateVector::from_amplitudes(vec![ONE, ONE]).is_err());
        assert!(StateVector::from_amplitudes(vec![ONE, ZERO, ZERO]).is_err());
        assert!(StateVector::from_unnormalized(vec![ONE, ONE]).is_ok());
    }
}
