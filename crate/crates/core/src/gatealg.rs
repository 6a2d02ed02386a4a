//! Unit quaternions as single-qubit gates.
//!
//! A unit quaternion `q` maps to the SU(2) matrix `Σ_μ q_μ ς_μ` with
//! `ς = (I, −iX, −iY, −iZ)`. Rotation axes use a polar convention whose zenith
//! is the x-axis: `n = (cos θ, sin θ cos φ, sin θ sin φ)`.

use crate::error::{invalid, Error, Result};
use crate::linalg::{mat2_identity, mat2_mul, Mat2, I, ONE, ZERO};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Unit 4-vector `(q₀, q₁, q₂, q₃)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion([f64; 4]);

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion([1.0, 0.0, 0.0, 0.0]);

    /// Normalizes `q`. Fails on zero or non-finite input.
    pub fn new(q: [f64; 4]) -> Result<Self> {
        let norm = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(invalid(format!("cannot normalize quaternion {q:?}")));
        }
        Ok(Self(q.map(|x| x / norm)))
    }

    /// Wraps components already known to be unit length.
    pub(crate) fn from_unit(q: [f64; 4]) -> Self {
        debug_assert!((q.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-9);
        Self(q)
    }

    pub fn components(&self) -> [f64; 4] {
        self.0
    }

    pub fn scalar(&self) -> f64 {
        self.0[0]
    }

    pub fn vector(&self) -> [f64; 3] {
        [self.0[1], self.0[2], self.0[3]]
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn neg(&self) -> Self {
        Self(self.0.map(|x| -x))
    }

    /// `Σ_μ q_μ ς_μ`.
    pub fn to_matrix(&self) -> Mat2 {
        let [a, b, c, d] = self.0;
        [
            [Complex64::new(a, -d), Complex64::new(-c, -b)],
            [Complex64::new(c, -b), Complex64::new(a, d)],
        ]
    }

    /// Quaternion of the gate product `R(self)·R(rhs)`.
    pub fn compose(&self, rhs: &Quaternion) -> Quaternion {
        let [a0, a1, a2, a3] = self.0;
        let [b0, b1, b2, b3] = rhs.0;
        let c = [
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + b0 * a1 + (a2 * b3 - a3 * b2),
            a0 * b2 + b0 * a2 + (a3 * b1 - a1 * b3),
            a0 * b3 + b0 * a3 + (a1 * b2 - a2 * b1),
        ];
        // renormalize to stop drift under long products
        Quaternion::new(c).expect("product of unit quaternions is non-zero")
    }

    /// Recovers the quaternion of an SU(2)-up-to-phase matrix.
    ///
    /// The global phase is removed so the result satisfies
    /// `to_matrix(q) ≈ e^{iα} m`; the sign of `q` is fixed so the first
    /// component with `|q_μ| > 1e-12` is positive.
    pub fn from_matrix(m: &Mat2) -> Result<Self> {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if (det.norm() - 1.0).abs() > 1e-8 {
            return Err(Error::NonUnitary {
                deviation: (det.norm() - 1.0).abs(),
            });
        }
        let phase = det.sqrt();
        let w = m.map(|row| row.map(|x| x / phase));
        // w = q0 I − i(q1 X + q2 Y + q3 Z)
        let q0 = 0.5 * (w[0][0] + w[1][1]).re;
        let q3 = 0.5 * (w[1][1] - w[0][0]).im;
        let q1 = -0.5 * (w[0][1] + w[1][0]).im;
        let q2 = 0.5 * (w[1][0] - w[0][1]).re;
        let mut q = Quaternion::new([q0, q1, q2, q3])?;
        if let Some(first) = q.0.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                q = q.neg();
            }
        }
        Ok(q)
    }
}

/// `ς_μ`: `(I, −iX, −iY, −iZ)[mu]`.
pub fn varsigma(mu: usize) -> Result<Mat2> {
    let mut e = [0.0; 4];
    *e.get_mut(mu)
        .ok_or_else(|| invalid(format!("varsigma index {mu} out of range 0..4")))? = 1.0;
    Ok(Quaternion(e).to_matrix())
}

/// Rotation angle `psi` about the axis at polar angles `(theta, phi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle {
    pub psi: f64,
    pub theta: f64,
    pub phi: f64,
}

impl AxisAngle {
    /// Axis-angle form of a Cartesian unit axis.
    pub fn from_axis(axis: [f64; 3], psi: f64) -> Result<Self> {
        let (theta, phi) = polar_of(axis)?;
        Ok(Self { psi, theta, phi })
    }

    pub fn axis(&self) -> [f64; 3] {
        axis_of(self.theta, self.phi)
    }
}

/// Cartesian axis for polar angles measured from x.
pub fn axis_of(theta: f64, phi: f64) -> [f64; 3] {
    [theta.cos(), theta.sin() * phi.cos(), theta.sin() * phi.sin()]
}

/// Polar angles `(theta, phi)` of a unit axis.
pub fn polar_of(axis: [f64; 3]) -> Result<(f64, f64)> {
    let norm = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !((norm - 1.0).abs() < 1e-9) {
        return Err(invalid(format!("rotation axis {axis:?} is not a unit vector")));
    }
    let theta = (axis[0] / norm).clamp(-1.0, 1.0).acos();
    let phi = axis[2].atan2(axis[1]);
    Ok((theta, phi))
}

pub fn from_axis_angle(a: AxisAngle) -> Quaternion {
    let (s, c) = (a.psi / 2.0).sin_cos();
    let n = a.axis();
    Quaternion::from_unit([c, s * n[0], s * n[1], s * n[2]])
}

/// `R_n(psi)` for a Cartesian unit axis.
pub fn rotation(axis: [f64; 3], psi: f64) -> Result<Quaternion> {
    Ok(from_axis_angle(AxisAngle::from_axis(axis, psi)?))
}

pub const AXIS_X: [f64; 3] = [1.0, 0.0, 0.0];
pub const AXIS_Y: [f64; 3] = [0.0, 1.0, 0.0];
pub const AXIS_Z: [f64; 3] = [0.0, 0.0, 1.0];
pub const CARTESIAN_AXES: [[f64; 3]; 3] = [AXIS_X, AXIS_Y, AXIS_Z];

/// `exp(−i a σ_k / 2)` for `k ∈ {x,y,z}` indexed 0..3.
pub fn axis_rotation(k: usize, angle: f64) -> Mat2 {
    from_axis_angle(AxisAngle::from_axis(CARTESIAN_AXES[k], angle).expect("unit axis")).to_matrix()
}

pub fn rz(angle: f64) -> Mat2 {
    axis_rotation(2, angle)
}

/// `√X = (1+i)/2·I + (1−i)/2·X`.
pub fn sqrt_x() -> Mat2 {
    let a = Complex64::new(0.5, 0.5);
    let b = Complex64::new(0.5, -0.5);
    [[a, b], [b, a]]
}

/// Angles `(phi, theta, lambda)` with `Rz(phi)·√X·Rz(theta)·√X·Rz(lambda) ≃ R(q)`.
///
/// Uses `Rz(φ)√X Rz(θ)√X Rz(λ) ≃ Rz(φ) Ry(−θ) Rz(−λ) Rx(π)`, so the angles come
/// from a ZYZ factorization of `R(q)·Rx(π)†`. At a pole `lambda` is set to 0.
pub fn zxz_decompose(q: &Quaternion) -> (f64, f64, f64) {
    let w = mat2_mul(&q.to_matrix(), &[[ZERO, I], [I, ZERO]]);
    let (a, b, c) = zyz_angles(&w);
    (a, -b, -c)
}

/// `(a, b, c)` with `Rz(a)·Ry(b)·Rz(c) ≃ w`.
fn zyz_angles(w: &Mat2) -> (f64, f64, f64) {
    const POLE: f64 = 1e-12;
    let (m00, m10) = (w[0][0].norm(), w[1][0].norm());
    let b = 2.0 * m10.atan2(m00);
    let (a, c) = if m10 < POLE {
        (w[1][1].arg() - w[0][0].arg(), 0.0)
    } else if m00 < POLE {
        (w[1][0].arg() - (-w[0][1]).arg(), 0.0)
    } else {
        let sum = w[1][1].arg() - w[0][0].arg();
        let diff = w[1][0].arg() - (-w[0][1]).arg();
        ((sum + diff) / 2.0, (sum - diff) / 2.0)
    };
    (a, b, c)
}

/// `Rz(phi)·√X·Rz(theta)·√X·Rz(lambda)`.
pub fn zxz_compose(phi: f64, theta: f64, lambda: f64) -> Mat2 {
    let sx = sqrt_x();
    [rz(phi), sx, rz(theta), sx, rz(lambda)]
        .iter()
        .fold(mat2_identity(), |acc, m| mat2_mul(&acc, m))
}

/// Max elementwise deviation between two 2×2 matrices after aligning global phase.
pub fn phase_aligned_distance(a: &Mat2, b: &Mat2) -> f64 {
    let overlap: Complex64 = (0..2)
        .flat_map(|r| (0..2).map(move |c| (r, c)))
        .map(|(r, c)| b[r][c].conj() * a[r][c])
        .sum();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        ONE
    };
    let mut worst: f64 = 0.0;
    for r in 0..2 {
        for c in 0..2 {
            worst = worst.max((a[r][c] - phase * b[r][c]).norm());
        }
    }
    worst
}

/// Uniform draw on S³ (Haar on SU(2)).
pub fn random_quaternion<R: Rng + ?Sized>(rng: &mut R) -> Quaternion {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        if let Ok(q) = Quaternion::new(q) {
            if q.norm() > 0.0 {
                return q;
            }
        }
    }
}

/// Uniform draw on the unit sphere S².
pub fn random_axis<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.map(|x| x / n);
        }
    }
}

/// Fraxis gate `R_n(π)` as a quaternion `(0, n)`.
pub fn fraxis_gate(axis: [f64; 3]) -> Result<Quaternion> {
    rotation(axis, std::f64::consts::PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;
    use crate::linalg::{mat2_adjoint, mat2_det, pauli_mat2};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn close(a: &Mat2, b: &Mat2, tol: f64) -> bool {
        (0..2).all(|r| (0..2).all(|c| (a[r][c] - b[r][c]).norm() < tol))
    }

    fn scaled(m: &Mat2, s: Complex64) -> Mat2 {
        m.map(|row| row.map(|x| x * s))
    }

    /// `cos(ψ/2) I − i sin(ψ/2) n·σ` built straight from Pauli matrices.
    fn direct_rotation(psi: f64, theta: f64, phi: f64) -> Mat2 {
        let n = [theta.cos(), theta.sin() * phi.cos(), theta.sin() * phi.sin()];
        let mut m = scaled(&pauli_mat2(0), Complex64::new((psi / 2.0).cos(), 0.0));
        for k in 0..3 {
            let term = scaled(&pauli_mat2(k + 1), Complex64::new(0.0, -(psi / 2.0).sin() * n[k]));
            for r in 0..2 {
                for c in 0..2 {
                    m[r][c] += term[r][c];
                }
            }
        }
        m
    }

    #[test]
    fn varsigma_table() {
        assert_eq!(varsigma(0).unwrap(), pauli_mat2(0));
        assert!(close(&varsigma(1).unwrap(), &scaled(&pauli_mat2(1), -I), 0.0 + 1e-15));
        assert!(close(&varsigma(2).unwrap(), &scaled(&pauli_mat2(2), -I), 1e-15));
        assert!(close(&varsigma(3).unwrap(), &scaled(&pauli_mat2(3), -I), 1e-15));
        assert!(varsigma(4).is_err());
    }

    #[test]
    fn to_matrix_examples() {
        assert_eq!(Quaternion::IDENTITY.to_matrix(), mat2_identity());
        let qx = Quaternion::new([0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(close(&qx.to_matrix(), &scaled(&pauli_mat2(1), -I), 1e-15));
        let h = FRAC_1_SQRT_2;
        let q = Quaternion::new([h, h, 0.0, 0.0]).unwrap();
        let expected = [
            [Complex64::new(h, 0.0), Complex64::new(0.0, -h)],
            [Complex64::new(0.0, -h), Complex64::new(h, 0.0)],
        ];
        assert!(close(&q.to_matrix(), &expected, 1e-15));
    }

    #[test]
    fn from_axis_angle_examples() {
        let zero = from_axis_angle(AxisAngle { psi: 0.0, theta: 1.2, phi: -0.4 });
        assert_eq!(zero.components(), [1.0, 0.0, 0.0, 0.0]);
        let y = from_axis_angle(AxisAngle { psi: PI, theta: FRAC_PI_2, phi: 0.0 });
        for (a, b) in y.components().iter().zip([0.0, 0.0, 1.0, 0.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        let x = from_axis_angle(AxisAngle { psi: FRAC_PI_2, theta: 0.0, phi: 0.0 });
        for (a, b) in x.components().iter().zip([FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0, 0.0]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn axis_angle_matches_direct_rotation_on_grid() {
        for i in 0..9 {
            for j in 0..7 {
                for k in 0..7 {
                    let psi = -2.0 * PI + i as f64 * PI / 2.0 + 0.1;
                    let theta = j as f64 * PI / 6.0;
                    let phi = -PI + k as f64 * PI / 3.0;
                    let q = from_axis_angle(AxisAngle { psi, theta, phi });
                    assert!(close(&q.to_matrix(), &direct_rotation(psi, theta, phi), 1e-12));
                }
            }
        }
    }

    #[test]
    fn polar_round_trip() {
        for axis in [AXIS_X, AXIS_Y, AXIS_Z, [FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2], [0.0, -FRAC_1_SQRT_2, FRAC_1_SQRT_2]] {
            let (t, p) = polar_of(axis).unwrap();
            for (a, b) in axis_of(t, p).iter().zip(axis) {
                assert!((a - b).abs() < 1e-15);
            }
        }
        assert!(polar_of([1.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn zxz_reconstructs_examples() {
        for q in [Quaternion::IDENTITY, Quaternion::new([0.0, 1.0, 0.0, 0.0]).unwrap()] {
            let (a, b, c) = zxz_decompose(&q);
            assert!(phase_aligned_distance(&zxz_compose(a, b, c), &q.to_matrix()) < 1e-9);
        }
        // poles of the ZYZ factor: pure Rx(π)-like and pure Rz-like inputs
        for q in [
            Quaternion::new([0.0, 0.0, 0.0, 1.0]).unwrap(),
            Quaternion::new([0.0, 0.0, 1.0, 0.0]).unwrap(),
            rotation(AXIS_Z, 0.7).unwrap(),
        ] {
            let (a, b, c) = zxz_decompose(&q);
            assert!(phase_aligned_distance(&zxz_compose(a, b, c), &q.to_matrix()) < 1e-9);
        }
    }

    #[test]
    fn zxz_reconstructs_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let q = random_quaternion(&mut rng);
            let (a, b, c) = zxz_decompose(&q);
            assert!(phase_aligned_distance(&zxz_compose(a, b, c), &q.to_matrix()) < 1e-9);
        }
    }

    #[test]
    fn compose_matches_matrix_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let (a, b) = (random_quaternion(&mut rng), random_quaternion(&mut rng));
            let lhs = a.compose(&b).to_matrix();
            let rhs = mat2_mul(&a.to_matrix(), &b.to_matrix());
            assert!(close(&lhs, &rhs, 1e-12));
        }
    }

    #[test]
    fn from_matrix_inverts_to_matrix_up_to_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let q = random_quaternion(&mut rng);
            let m = scaled(&q.to_matrix(), Complex64::from_polar(1.0, 0.37));
            let back = Quaternion::from_matrix(&m).unwrap();
            let same = back.components().iter().zip(q.components()).all(|(a, b)| (a - b).abs() < 1e-10);
            let flipped = back.components().iter().zip(q.components()).all(|(a, b)| (a + b).abs() < 1e-10);
            assert!(same || flipped);
        }
    }

    #[test]
    fn random_quaternion_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 100_000;
        let mut mean = [0.0; 4];
        let mut second = [[0.0; 4]; 4];
        let mut p00 = Vec::with_capacity(n);
        for _ in 0..n {
            let q = random_quaternion(&mut rng);
            assert!((q.norm() - 1.0).abs() < 1e-12);
            let c = q.components();
            for mu in 0..4 {
                mean[mu] += c[mu];
                for nu in 0..4 {
                    second[mu][nu] += c[mu] * c[nu];
                }
            }
            p00.push(q.to_matrix()[0][0].norm_sqr());
        }
        let nf = n as f64;
        // Var(q_μ) = 1/4; Var(q_μ q_ν) ≤ 1/8 for the moments below
        let se_mean = (0.25 / nf).sqrt();
        for m in mean {
            assert!((m / nf).abs() < 4.0 * se_mean);
        }
        for mu in 0..4 {
            for nu in 0..4 {
                let target = if mu == nu { 0.25 } else { 0.0 };
                let var = if mu == nu { 1.0 / 8.0 - 1.0 / 16.0 } else { 1.0 / 24.0 };
                assert!((second[mu][nu] / nf - target).abs() < 4.0 * (var / nf).sqrt());
            }
        }
        let avg = p00.iter().sum::<f64>() / nf;
        let var = p00.iter().map(|x| (x - avg).powi(2)).sum::<f64>() / (nf - 1.0);
        assert!((avg - 0.5).abs() < 4.0 * (var / nf).sqrt());
    }

    #[test]
    fn matrices_are_special_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let m = random_quaternion(&mut rng).to_matrix();
            assert!(close(&mat2_mul(&mat2_adjoint(&m), &m), &mat2_identity(), 1e-12));
            assert!((mat2_det(&m) - ONE).norm() < 1e-12);
        }
    }

    #[test]
    fn negated_quaternion_negates_matrix() {
        let q = Quaternion::new([0.3, -0.2, 0.5, 0.1]).unwrap();
        assert!(close(&q.neg().to_matrix(), &scaled(&q.to_matrix(), -ONE), 1e-15));
    }
}
