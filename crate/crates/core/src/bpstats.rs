//! Spectral statistics of the centered S-matrix under random circuits.
//!
//! Three experiments live here: the Monte Carlo second moment of the spectral
//! radius for template circuits, the upper bound for circuits whose halves are
//! Haar-random, and the lower bound for brickworks of Haar 2-qubit blocks.
//!
//! The Hilbert–Schmidt distance used by [`epsilon`] is the squared one,
//! `tr[(M − tr(M)·I/d)†(M − tr(M)·I/d)]`.

use crate::circuits::{build_template, BlockCircuit, EvalCounter, Family, LightCones, ParameterSet, SlotContext, SlotObjective};
use crate::error::{invalid, Error, Result};
use crate::gatealg::varsigma;
use crate::linalg::{mat2_adjoint, mat2_mul, reduced_density, CMat, Mat2, ZERO};
use crate::models::{local_z_observable, Cost};
use crate::randhaar::{haar_state, haar_unitary, par_samples, seeded, Welford};
use crate::simcore::{Observable, PauliString, StateVector};
use crate::smatrix::{centered, fqs_matrix_from, fraxis_matrix_from, nft_matrix_from, spectral_radius, SymMatrix};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Largest register accepted by the dense upper-bound evaluator.
pub const MAX_DENSE_BOUND_QUBITS: usize = 8;

/// Default Monte Carlo sample count.
pub const DEFAULT_SAMPLES: usize = 1000;

/// Which single-gate matrix is probed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    /// 2×2 angle matrix about a fixed unit axis.
    Nft { axis: [f64; 3] },
    /// 3×3 axis matrix at angle π.
    Fraxis,
    /// Full 4×4 matrix.
    Fqs,
}

impl MatrixKind {
    pub fn p(&self) -> usize {
        match self {
            MatrixKind::Nft { .. } => 2,
            MatrixKind::Fraxis => 3,
            MatrixKind::Fqs => 4,
        }
    }

    /// The kind matching a matrix size; `p = 2` uses the z axis.
    pub fn from_p(p: usize) -> Result<Self> {
        match p {
            2 => Ok(MatrixKind::Nft { axis: [0.0, 0.0, 1.0] }),
            3 => Ok(MatrixKind::Fraxis),
            4 => Ok(MatrixKind::Fqs),
            _ => Err(invalid(format!("matrix size p must be 2, 3 or 4, got {p}"))),
        }
    }

    pub fn build<O: SlotObjective + ?Sized>(&self, obj: &O, counter: &mut EvalCounter) -> Result<SymMatrix> {
        match *self {
            MatrixKind::Nft { axis } => nft_matrix_from(obj, axis, counter),
            MatrixKind::Fraxis => fraxis_matrix_from(obj, counter),
            MatrixKind::Fqs => fqs_matrix_from(obj, counter),
        }
    }

    /// Gate basis whose coefficients are the matrix coordinates.
    pub fn basis(&self) -> Vec<Mat2> {
        let s = |mu| varsigma(mu).expect("basis index in range");
        match *self {
            MatrixKind::Nft { axis } => {
                let mut rot = [[ZERO; 2]; 2];
                for (k, m) in axis.iter().enumerate() {
                    let g = s(k + 1);
                    for r in 0..2 {
                        for c in 0..2 {
                            rot[r][c] += g[r][c] * m;
                        }
                    }
                }
                vec![s(0), rot]
            }
            MatrixKind::Fraxis => (1..4).map(s).collect(),
            MatrixKind::Fqs => (0..4).map(s).collect(),
        }
    }
}

impl fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixKind::Nft { axis } => write!(f, "nft[{},{},{}]", axis[0], axis[1], axis[2]),
            MatrixKind::Fraxis => f.write_str("fraxis"),
            MatrixKind::Fqs => f.write_str("fqs"),
        }
    }
}

/// Cost used by the spectral-radius scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanCost {
    /// Infidelity against a fresh Haar-random target per sample.
    Global,
    /// `Z` on qubit 0.
    Local,
}

impl fmt::Display for ScanCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScanCost::Global => "global",
            ScanCost::Local => "local",
        })
    }
}

impl FromStr for ScanCost {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "global" => Ok(ScanCost::Global),
            "local" | "local_z" | "local-z" => Ok(ScanCost::Local),
            other => Err(invalid(format!("unknown cost '{other}' (expected global or local)"))),
        }
    }
}

/// Echo of the experiment behind an estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentConfig {
    pub circuit: String,
    pub n: usize,
    pub layers: usize,
    pub cost: String,
    pub slot: usize,
    pub matrix: String,
    pub seed: u64,
}

/// Monte Carlo estimate of `E[r(S_c)²]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
    pub config: MomentConfig,
}

impl MomentEstimate {
    pub fn from_values(values: &[f64], config: MomentConfig) -> Self {
        let w: Welford = values.iter().copied().collect();
        Self {
            mean: w.mean(),
            stderr: w.stderr(),
            samples: values.len(),
            config,
        }
    }

    /// A single sample gives no error estimate.
    pub fn is_reliable(&self) -> bool {
        self.samples >= 2
    }
}

/// `r(centered(S))²`.
pub fn centered_radius_sq(s: &SymMatrix) -> f64 {
    spectral_radius(&centered(s)).powi(2)
}

/// Second moment of the spectral radius of the centered FQS matrix at `slot`,
/// with every gate of the template drawn Haar-randomly per sample.
pub fn second_moment_spectral_radius(
    family: Family,
    n: usize,
    layers: usize,
    cost: ScanCost,
    slot: usize,
    samples: usize,
    seed: u64,
) -> Result<MomentEstimate> {
    if samples == 0 {
        return Err(invalid("samples must be positive"));
    }
    let template = build_template(family, n, layers)?;
    template.slot(slot)?;
    let local = Cost::Observable(local_z_observable(n)?);
    let values = par_samples(seed, samples, |rng| -> Result<f64> {
        let params = ParameterSet::random(template.num_slots(), rng);
        let global;
        let c = match cost {
            ScanCost::Global => {
                global = Cost::Infidelity(haar_state(n, rng));
                &global
            }
            ScanCost::Local => &local,
        };
        let ctx = SlotContext::new(&template, &params, slot, c)?;
        Ok(centered_radius_sq(&fqs_matrix_from(&ctx, &mut EvalCounter::new())?))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(MomentEstimate::from_values(
        &values,
        MomentConfig {
            circuit: family.to_string(),
            n,
            layers,
            cost: cost.to_string(),
            slot,
            matrix: MatrixKind::Fqs.to_string(),
            seed,
        },
    ))
}

/// Squared Hilbert–Schmidt distance of `m` from `tr(m)·I/d`.
pub fn epsilon(m: &CMat) -> f64 {
    let d = m.dim();
    if d == 0 {
        return 0.0;
    }
    let shift = m.trace() / d as f64;
    let mut a = m.clone();
    for i in 0..d {
        a[(i, i)] -= shift;
    }
    a.frobenius_norm().powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSide {
    Upper,
    Lower,
}

/// Which half of the circuit is assumed to be a 2-design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignSide {
    /// The circuit before the probed gate.
    Before,
    /// The circuit after the probed gate.
    After,
}

impl fmt::Display for DesignSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DesignSide::Before => "before",
            DesignSide::After => "after",
        })
    }
}

/// A bound next to the Monte Carlo moment it constrains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound_value: f64,
    /// Monte Carlo error of the bound itself (0 for closed forms).
    pub bound_stderr: f64,
    pub side: BoundSide,
    pub estimate: MomentEstimate,
    /// `bound − mean` for upper bounds, `mean − bound` for lower bounds.
    pub margin: f64,
    pub passed: bool,
}

impl BoundReport {
    pub fn new(bound_value: f64, bound_stderr: f64, side: BoundSide, estimate: MomentEstimate) -> Self {
        let slack = 3.0 * estimate.stderr;
        let (margin, passed) = match side {
            BoundSide::Upper => (bound_value - estimate.mean, estimate.mean <= bound_value + slack),
            BoundSide::Lower => (estimate.mean - bound_value, estimate.mean >= bound_value - slack),
        };
        Self {
            bound_value,
            bound_stderr,
            side,
            estimate,
            margin,
            passed,
        }
    }
}

/// `M · (op on qubit)`.
fn right_mul_single(m: &CMat, op: &Mat2, qubit: usize) -> CMat {
    let d = m.dim();
    let bit = 1usize << qubit;
    let mut out = CMat::zeros(d);
    for r in 0..d {
        for c0 in (0..d).filter(|c| c & bit == 0) {
            let c1 = c0 | bit;
            let (a, b) = (m[(r, c0)], m[(r, c1)]);
            out[(r, c0)] = a * op[0][0] + b * op[1][0];
            out[(r, c1)] = a * op[0][1] + b * op[1][1];
        }
    }
    out
}

/// Single-gate objective `⟨φ| G† H G |φ⟩` with dense environment.
#[derive(Debug, Clone)]
pub struct DenseObjective {
    state: StateVector,
    qubit: usize,
    hamiltonian: CMat,
}

impl DenseObjective {
    /// `state` already includes the circuit before the gate; `hamiltonian`
    /// already includes the circuit after it.
    pub fn new(state: StateVector, qubit: usize, hamiltonian: CMat) -> Result<Self> {
        if hamiltonian.dim() != state.dim() {
            return Err(Error::SizeMismatch {
                expected: state.dim(),
                actual: hamiltonian.dim(),
            });
        }
        if qubit >= state.num_qubits() {
            return Err(Error::QubitOutOfRange {
                index: qubit,
                num_qubits: state.num_qubits(),
            });
        }
        Ok(Self {
            state,
            qubit,
            hamiltonian,
        })
    }
}

impl SlotObjective for DenseObjective {
    fn energy_with(&self, gate: &Mat2, counter: &mut EvalCounter) -> Result<f64> {
        let mut s = self.state.clone();
        s.apply_mat2(self.qubit, gate);
        let hs = self.hamiltonian.apply(s.amplitudes());
        counter.increment();
        Ok(s.amplitudes().iter().zip(&hs).map(|(a, b)| (a.conj() * b).re).sum())
    }
}

fn check_dense(h: &Observable, input: &StateVector, qubit: usize) -> Result<usize> {
    let n = h.num_qubits();
    if n > MAX_DENSE_BOUND_QUBITS {
        return Err(Error::Unsupported(format!(
            "dense bound evaluation on {n} qubits (limit {MAX_DENSE_BOUND_QUBITS})"
        )));
    }
    if input.num_qubits() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            actual: input.num_qubits(),
        });
    }
    if qubit >= n {
        return Err(Error::QubitOutOfRange { index: qubit, num_qubits: n });
    }
    Ok(n)
}

fn conjugate(u: &CMat, h: &CMat) -> CMat {
    &(&u.adjoint() * h) * u
}

/// Upper bound on `E[r(S_c)²]` when the half named by `design` is a 2-design
/// and the other half is Haar-random. The remaining expectation is a Monte
/// Carlo average; returns `(value, stderr)`.
#[allow(clippy::too_many_arguments)]
pub fn theorem1_bound(
    design: DesignSide,
    h: &Observable,
    input: &StateVector,
    qubit: usize,
    kind: MatrixKind,
    mc_samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let n = check_dense(h, input, qubit)?;
    if mc_samples == 0 {
        return Err(invalid("mc_samples must be positive"));
    }
    let d = (1usize << n) as f64;
    let p = kind.p();
    let pf = p as f64;
    let basis = kind.basis();
    let hm = h.to_matrix();
    let tr_h = hm.trace().re;
    let tr_h2 = hm.trace_product(&hm).re;
    let tr_rho2 = 1.0;
    let delta_rho = tr_rho2 - 1.0 / d;
    let delta_h = tr_h2 - tr_h * tr_h / d;
    let weight = |mu: usize, nu: usize| {
        let sign = if mu == nu { 1.0 } else { -1.0 };
        pf * sign - 2.0
    };
    let dim = 1usize << n;
    let terms = par_samples(seed, mc_samples, |rng| {
        let u = haar_unitary(dim, rng);
        let mut total = 0.0;
        match design {
            DesignSide::Before => {
                let hp = conjugate(&u, &hm);
                for mu in 0..p {
                    for nu in 0..p {
                        let b = mat2_mul(&basis[mu], &mat2_adjoint(&basis[nu]));
                        let x = right_mul_single(&hp, &b, qubit);
                        let y = right_mul_single(&hp, &mat2_adjoint(&b), qubit);
                        total += weight(mu, nu) * 2.0 * x.trace_product(&y).re;
                    }
                }
            }
            DesignSide::After => {
                let phi = u.apply(input.amplitudes());
                let state = StateVector::from_unnormalized(phi).expect("unitary image is nonzero");
                for mu in 0..p {
                    for nu in 0..p {
                        let a = mat2_mul(&mat2_adjoint(&basis[mu]), &basis[nu]);
                        let mut s = state.clone();
                        s.apply_mat2(qubit, &a);
                        let amp = state.inner(&s).expect("same register");
                        total += weight(mu, nu) * 2.0 * amp.norm_sqr();
                    }
                }
            }
        }
        total
    });
    let w: Welford = terms.into_iter().collect();
    let denom = d * d - 1.0;
    let (lead, scale) = match design {
        DesignSide::Before => (pf * pf * tr_h2 * delta_rho / (2.0 * denom), delta_rho / (4.0 * pf * denom)),
        DesignSide::After => (pf * pf * tr_rho2 * delta_h / (2.0 * denom), delta_h / (4.0 * pf * denom)),
    };
    Ok((lead + scale * w.mean(), scale.abs() * w.stderr()))
}

/// Per-sample `S` for a gate between two independent Haar unitaries.
pub fn haar_sandwich_matrices(
    h: &Observable,
    input: &StateVector,
    qubit: usize,
    kind: MatrixKind,
    samples: usize,
    seed: u64,
) -> Result<Vec<SymMatrix>> {
    let n = check_dense(h, input, qubit)?;
    let hm = h.to_matrix();
    let dim = 1usize << n;
    par_samples(seed, samples, |rng| {
        let u1 = haar_unitary(dim, rng);
        let u2 = haar_unitary(dim, rng);
        let state = StateVector::from_unnormalized(u1.apply(input.amplitudes()))?;
        let obj = DenseObjective::new(state, qubit, conjugate(&u2, &hm))?;
        kind.build(&obj, &mut EvalCounter::new())
    })
    .into_iter()
    .collect()
}

/// Upper bound next to the Monte Carlo moment for Haar `U₁` and `U₂`.
#[allow(clippy::too_many_arguments)]
pub fn theorem1_check(
    design: DesignSide,
    h: &Observable,
    input: &StateVector,
    qubit: usize,
    kind: MatrixKind,
    samples: usize,
    mc_samples: usize,
    seed: u64,
) -> Result<BoundReport> {
    if samples == 0 {
        return Err(invalid("samples must be positive"));
    }
    let (bound, bound_err) = theorem1_bound(design, h, input, qubit, kind, mc_samples, seed ^ 0x9e37_79b9_7f4a_7c15)?;
    let values: Vec<f64> = haar_sandwich_matrices(h, input, qubit, kind, samples, seed)?
        .iter()
        .map(centered_radius_sq)
        .collect();
    let estimate = MomentEstimate::from_values(
        &values,
        MomentConfig {
            circuit: format!("haar_sandwich[{design}]"),
            n: h.num_qubits(),
            layers: 0,
            cost: "observable".into(),
            slot: qubit,
            matrix: kind.to_string(),
            seed,
        },
    );
    Ok(BoundReport::new(bound, bound_err, BoundSide::Upper, estimate))
}

/// Lower bound on `E[r(S_c)²]` for a gate in block layer `probe_layer` of a
/// brickwork with `layers` block layers of `m`-qubit blocks.
///
/// Terms of `h` whose support lies inside the forward cone contribute; every
/// contiguous run `(k, k')` of backward-cone subsystems contributes the
/// distance of the input's reduced state on qubits `m·k .. m·(k'+1)`.
#[allow(clippy::too_many_arguments)]
pub fn theorem2_bound(
    m: usize,
    layers: usize,
    probe_layer: usize,
    p: usize,
    h: &Observable,
    input: &StateVector,
    cones: &LightCones,
) -> Result<f64> {
    if m == 0 || !(2..=4).contains(&p) {
        return Err(invalid(format!("need m ≥ 1 and p ∈ 2..=4, got m={m}, p={p}")));
    }
    if input.num_qubits() != h.num_qubits() {
        return Err(Error::SizeMismatch {
            expected: h.num_qubits(),
            actual: input.num_qubits(),
        });
    }
    let mut h_sum = 0.0;
    for (c, word) in h.terms() {
        let support = word.support();
        if support.len() > m {
            return Err(invalid(format!("term {word} acts on {} > {m} qubits", support.len())));
        }
        if cones.covers(&support) {
            let restricted = PauliString::new(support.iter().map(|&q| word.letters()[q]).collect());
            h_sum += c * c * epsilon(&restricted.to_matrix());
        }
    }
    let mut rho_sum = 0.0;
    for &(k, k2) in &cones.subsystem_ranges {
        let qubits: Vec<usize> = (m * k..m * (k2 + 1)).collect();
        if qubits.last().is_some_and(|&q| q >= input.num_qubits()) {
            return Err(invalid(format!("subsystem range ({k}, {k2}) exceeds the register")));
        }
        rho_sum += epsilon(&reduced_density(input.amplitudes(), &qubits));
    }
    let (pf, mf) = (p as f64, m as f64);
    let dm = 2f64.powf(mf);
    let coeff = (pf + 2.0) * (pf - 1.0) * 2f64.powf(mf * (probe_layer as f64 + 1.0) - 1.0)
        / (pf * (dm * dm - 1.0).powi(2) * (dm + 1.0).powi((layers + probe_layer) as i32));
    Ok(coeff * h_sum * rho_sum)
}

/// Lower bound next to the Monte Carlo moment for Haar-block brickworks, with
/// `Z` on qubit 0 as the cost and `|0…0⟩` as the input.
pub fn theorem2_check(
    n: usize,
    layers: usize,
    probe_layer: usize,
    kind: MatrixKind,
    samples: usize,
    seed: u64,
) -> Result<BoundReport> {
    if samples == 0 {
        return Err(invalid("samples must be positive"));
    }
    let obs = local_z_observable(n)?;
    let cost = Cost::Observable(obs.clone());
    let input = StateVector::zero(n);
    let cones = BlockCircuit::random(n, layers, probe_layer, 0, &mut seeded(seed))?.light_cones();
    let bound = theorem2_bound(2, layers, probe_layer, kind.p(), &obs, &input, &cones)?;
    let values = par_samples(seed, samples, |rng| -> Result<f64> {
        let circuit = BlockCircuit::random(n, layers, probe_layer, 0, rng)?;
        let obj = circuit.objective(&input, &cost)?;
        Ok(centered_radius_sq(&kind.build(&obj, &mut EvalCounter::new())?))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let estimate = MomentEstimate::from_values(
        &values,
        MomentConfig {
            circuit: "haar_blocks".into(),
            n,
            layers,
            cost: ScanCost::Local.to_string(),
            slot: probe_layer,
            matrix: kind.to_string(),
            seed,
        },
    );
    Ok(BoundReport::new(bound, 0.0, BoundSide::Lower, estimate))
}
