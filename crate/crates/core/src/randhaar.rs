//! Seeded randomness, Haar sampling, and the second-moment Weingarten check.
//!
//! Every stochastic routine draws from ChaCha8 keyed by a 64-bit seed. Parallel
//! Monte Carlo gives sample `i` its own stream (`set_stream(i)`), so results do
//! not depend on scheduling or thread count.

use crate::error::{Error, Result};
use crate::linalg::{CMat, ZERO};
use crate::simcore::StateVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent substream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A 64-bit seed for child `index` of `seed`, for runs that need their own
/// seeded generators.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    substream(seed, index).gen()
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-random `dim × dim` unitary.
///
/// Gram-Schmidt on the columns of a Ginibre matrix; this is the QR factor
/// whose triangular part has a positive real diagonal.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    assert!(dim >= 1, "haar_unitary: dim must be positive");
    let mut cols: Vec<Vec<Complex64>> = (0..dim)
        .map(|_| (0..dim).map(|_| complex_normal(rng)).collect())
        .collect();
    for j in 0..dim {
        let (done, rest) = cols.split_at_mut(j);
        let v = &mut rest[0];
        for u in done.iter() {
            let proj: Complex64 = u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
            for (x, a) in v.iter_mut().zip(u) {
                *x -= proj * a;
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    let mut u = CMat::zeros(dim);
    for (c, col) in cols.iter().enumerate() {
        for (r, x) in col.iter().enumerate() {
            u[(r, c)] = *x;
        }
    }
    u
}

/// Haar-random pure state on `n` qubits.
pub fn haar_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> StateVector {
    loop {
        let amps: Vec<Complex64> = (0..1usize << n).map(|_| complex_normal(rng)).collect();
        if let Ok(s) = StateVector::from_unnormalized(amps) {
            return s;
        }
    }
}

/// One-pass mean/variance accumulator.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance (0 for fewer than two samples).
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for Welford {
    fn from_iter<T: IntoIterator<Item = f64>>(iter: T) -> Self {
        let mut w = Welford::default();
        for x in iter {
            w.push(x);
        }
        w
    }
}

/// Evaluates `f` once per sample on its own substream, in parallel, and
/// returns the outputs in sample order.
pub fn par_samples<T, F>(seed: u64, samples: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut SeededRng) -> T + Sync,
{
    (0..samples)
        .into_par_iter()
        .map(|i| f(&mut substream(seed, i as u64)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeingartenReport {
    pub mc_estimate: Complex64,
    pub closed_form: Complex64,
    /// Standard error of the real part of the Monte Carlo mean.
    pub stderr: f64,
    pub z_score: f64,
}

/// Closed-form Haar average of `tr[W A W† B W C W† D]`.
pub fn weingarten_closed_form(a: &CMat, b: &CMat, c: &CMat, d: &CMat) -> Result<Complex64> {
    let dim = check_dims(&[a, b, c, d])?;
    let df = dim as f64;
    if dim == 1 {
        return Ok(a[(0, 0)] * b[(0, 0)] * c[(0, 0)] * d[(0, 0)]);
    }
    let (ta, tb, tc, td) = (a.trace(), b.trace(), c.trace(), d.trace());
    let tac = a.trace_product(c);
    let tbd = b.trace_product(d);
    let denom = df * df - 1.0;
    Ok((ta * tc * tbd + tac * tb * td) / denom - (tac * tbd + ta * tb * tc * td) / (df * denom))
}

fn check_dims(ms: &[&CMat]) -> Result<usize> {
    let dim = ms[0].dim();
    for m in ms {
        if m.dim() != dim {
            return Err(Error::SizeMismatch {
                expected: dim,
                actual: m.dim(),
            });
        }
    }
    Ok(dim)
}

/// Monte Carlo estimate of `E_W tr[W A W† B W C W† D]` against the closed form.
pub fn weingarten_check(
    a: &CMat,
    b: &CMat,
    c: &CMat,
    d: &CMat,
    samples: usize,
    seed: u64,
) -> Result<WeingartenReport> {
    let closed_form = weingarten_closed_form(a, b, c, d)?;
    let dim = a.dim();
    let values = par_samples(seed, samples, |rng| {
        let w = haar_unitary(dim, rng);
        let wd = w.adjoint();
        let left = &(&(&w * a) * &wd) * b;
        let right = &(&(&w * c) * &wd) * d;
        left.trace_product(&right)
    });
    let re: Welford = values.iter().map(|v| v.re).collect();
    let mc_estimate = values.iter().fold(ZERO, |acc, v| acc + v) / samples.max(1) as f64;
    let stderr = re.stderr();
    let diff = (re.mean() - closed_form.re).abs();
    let z_score = if stderr > 0.0 {
        diff / stderr
    } else if diff < 1e-12 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(WeingartenReport {
        mc_estimate,
        closed_form,
        stderr,
        z_score,
    })
}
