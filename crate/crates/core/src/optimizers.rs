//! Sequential single-gate optimizers and an Adam baseline.

use crate::circuits::{
    prepare_state, CircuitTemplate, EvalCounter, ParameterSet, SlotContext, SlotObjective,
};
use crate::error::{invalid, Error, Result};
use crate::gatealg::{random_axis, rotation, Quaternion, CARTESIAN_AXES};
use crate::linalg::Mat2;
use crate::models::Cost;
use crate::randhaar::seeded;
use crate::smatrix::{
    centered, fqs_matrix_from, fraxis_matrix_from, min_eigenpair, nft_matrix_from,
    rotoselect_matrices_from, spectral_radius, SymMatrix,
};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;
use std::str::FromStr;

/// Updates are skipped when the centered matrix's spectral radius is below this.
pub const DEFAULT_SKIP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Fqs,
    Fraxis,
    Rotosolve,
    Rotoselect,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Fqs, Method::Fraxis, Method::Rotosolve, Method::Rotoselect];

    /// Cost evaluations per gate update.
    pub fn evals_per_update(self) -> u64 {
        match self {
            Method::Fqs => 10,
            Method::Fraxis => 6,
            Method::Rotosolve => 3,
            Method::Rotoselect => 7,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Fqs => "fqs",
            Method::Fraxis => "fraxis",
            Method::Rotosolve => "rotosolve",
            Method::Rotoselect => "rotoselect",
        })
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fqs" => Ok(Method::Fqs),
            "fraxis" => Ok(Method::Fraxis),
            "rotosolve" | "nft" => Ok(Method::Rotosolve),
            "rotoselect" => Ok(Method::Rotoselect),
            other => Err(invalid(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateOutcome {
    pub quaternion: Quaternion,
    /// Cost after the update, read off the eigenvalue (no extra evaluation).
    pub energy: f64,
    pub skipped: bool,
    /// Axis chosen by a Rotoselect update.
    pub axis: Option<usize>,
}

fn is_flat(s: &SymMatrix, tol: f64) -> bool {
    spectral_radius(&centered(s)) < tol
}

fn kept(s: &SymMatrix, coords: &[f64], q: Quaternion, axis: Option<usize>) -> UpdateOutcome {
    UpdateOutcome {
        quaternion: q,
        energy: s.quadratic_form(coords),
        skipped: true,
        axis,
    }
}

/// Replaces the gate with the minimizer over all of SU(2).
pub fn fqs_step<O: SlotObjective + ?Sized>(
    obj: &O,
    current: Quaternion,
    skip_tol: f64,
    counter: &mut EvalCounter,
) -> Result<UpdateOutcome> {
    let s = fqs_matrix_from(obj, counter)?;
    if is_flat(&s, skip_tol) {
        return Ok(kept(&s, &current.components(), current, None));
    }
    let e = min_eigenpair(&s);
    Ok(UpdateOutcome {
        quaternion: Quaternion::new([e.vector[0], e.vector[1], e.vector[2], e.vector[3]])?,
        energy: e.value,
        skipped: false,
        axis: None,
    })
}

/// Replaces the gate with the best π rotation.
pub fn fraxis_step<O: SlotObjective + ?Sized>(
    obj: &O,
    current: Quaternion,
    skip_tol: f64,
    counter: &mut EvalCounter,
) -> Result<UpdateOutcome> {
    let s = fraxis_matrix_from(obj, counter)?;
    if is_flat(&s, skip_tol) {
        // a flat axis matrix only pins the energy of π rotations
        let v = current.vector();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if current.scalar().abs() < 1e-12 && (norm - 1.0).abs() < 1e-12 {
            return Ok(kept(&s, &v, current, None));
        }
    }
    let e = min_eigenpair(&s);
    Ok(UpdateOutcome {
        quaternion: Quaternion::new([0.0, e.vector[0], e.vector[1], e.vector[2]])?,
        energy: e.value,
        skipped: false,
        axis: None,
    })
}

fn angle_from(c: &[f64]) -> f64 {
    2.0 * c[1].atan2(c[0])
}

/// Optimal angle about a fixed axis.
pub fn rotosolve_step<O: SlotObjective + ?Sized>(
    obj: &O,
    axis: [f64; 3],
    current: Quaternion,
    skip_tol: f64,
    counter: &mut EvalCounter,
) -> Result<UpdateOutcome> {
    let s = nft_matrix_from(obj, axis, counter)?;
    if is_flat(&s, skip_tol) {
        if let Some(c) = on_axis_coords(current, axis) {
            return Ok(kept(&s, &c, current, None));
        }
    }
    let e = min_eigenpair(&s);
    Ok(UpdateOutcome {
        quaternion: rotation(axis, angle_from(&e.vector))?,
        energy: e.value,
        skipped: false,
        axis: None,
    })
}

/// `(cos ψ/2, sin ψ/2)` if `q` is a rotation about `axis`.
fn on_axis_coords(q: Quaternion, axis: [f64; 3]) -> Option<[f64; 2]> {
    let v = q.vector();
    let along: f64 = v.iter().zip(axis).map(|(a, b)| a * b).sum();
    let perp: f64 = v.iter().zip(axis).map(|(a, b)| (a - along * b).powi(2)).sum::<f64>().sqrt();
    (perp < 1e-12).then_some([q.scalar(), along])
}

/// Best angle over the x, y and z axes; ties go to the lowest axis index.
pub fn rotoselect_step<O: SlotObjective + ?Sized>(
    obj: &O,
    current: Quaternion,
    skip_tol: f64,
    counter: &mut EvalCounter,
) -> Result<UpdateOutcome> {
    let mats = rotoselect_matrices_from(obj, counter)?;
    if mats.iter().all(|m| is_flat(m, skip_tol)) {
        for (k, axis) in CARTESIAN_AXES.iter().enumerate() {
            if let Some(c) = on_axis_coords(current, *axis) {
                return Ok(kept(&mats[k], &c, current, Some(k)));
            }
        }
    }
    let mut best: Option<(usize, crate::smatrix::EigPair)> = None;
    for (k, m) in mats.iter().enumerate() {
        let e = min_eigenpair(m);
        if best.as_ref().is_none_or(|(_, b)| e.value < b.value - 1e-12) {
            best = Some((k, e));
        }
    }
    let (k, e) = best.expect("three candidates");
    Ok(UpdateOutcome {
        quaternion: rotation(CARTESIAN_AXES[k], angle_from(&e.vector))?,
        energy: e.value,
        skipped: false,
        axis: Some(k),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodConfig {
    pub method: Method,
    /// One unit axis per slot; required by Rotosolve.
    pub axes: Option<Vec<[f64; 3]>>,
    pub skip_tol: f64,
}

impl MethodConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            axes: None,
            skip_tol: DEFAULT_SKIP_TOL,
        }
    }

    pub fn with_axes(mut self, axes: Vec<[f64; 3]>) -> Self {
        self.axes = Some(axes);
        self
    }

    fn validate(&self, slots: usize) -> Result<()> {
        if self.method == Method::Rotosolve {
            match &self.axes {
                Some(a) if a.len() == slots => {}
                Some(a) => {
                    return Err(Error::SizeMismatch {
                        expected: slots,
                        actual: a.len(),
                    })
                }
                None => return Err(invalid("rotosolve needs one axis per slot")),
            }
        }
        if !(self.skip_tol >= 0.0) {
            return Err(invalid("skip tolerance must be non-negative"));
        }
        Ok(())
    }
}

/// Applies one update of `config.method` to `slot` and writes the new gate back.
pub fn update_slot(
    template: &CircuitTemplate,
    params: &mut ParameterSet,
    slot: usize,
    cost: &Cost,
    config: &MethodConfig,
    counter: &mut EvalCounter,
) -> Result<UpdateOutcome> {
    config.validate(template.num_slots())?;
    let current = params
        .get(slot)
        .ok_or_else(|| invalid(format!("slot {slot} out of range")))?;
    let outcome = {
        let ctx = SlotContext::new(template, params, slot, cost)?;
        match config.method {
            Method::Fqs => fqs_step(&ctx, current, config.skip_tol, counter)?,
            Method::Fraxis => fraxis_step(&ctx, current, config.skip_tol, counter)?,
            Method::Rotosolve => {
                let axis = config.axes.as_ref().expect("validated")[slot];
                rotosolve_step(&ctx, axis, current, config.skip_tol, counter)?
            }
            Method::Rotoselect => rotoselect_step(&ctx, current, config.skip_tol, counter)?,
        }
    };
    params.set(slot, outcome.quaternion)?;
    Ok(outcome)
}

pub fn fqs_update(
    template: &CircuitTemplate,
    params: &mut ParameterSet,
    slot: usize,
    cost: &Cost,
    counter: &mut EvalCounter,
) -> Result<UpdateOutcome> {
    update_slot(template, params, slot, cost, &MethodConfig::new(Method::Fqs), counter)
}

pub fn fraxis_update(
    template: &CircuitTemplate,
    params: &mut ParameterSet,
    slot: usize,
    cost: &Cost,
    counter: &mut EvalCounter,
) -> Result<UpdateOutcome> {
    update_slot(template, params, slot, cost, &MethodConfig::new(Method::Fraxis), counter)
}

pub fn rotosolve_update(
    template: &CircuitTemplate,
    params: &mut ParameterSet,
    slot: usize,
    axis: [f64; 3],
    cost: &Cost,
    counter: &mut EvalCounter,
) -> Result<UpdateOutcome> {
    let current = params.get(slot).ok_or_else(|| invalid(format!("slot {slot} out of range")))?;
    let outcome = {
        let ctx = SlotContext::new(template, params, slot, cost)?;
        rotosolve_step(&ctx, axis, current, DEFAULT_SKIP_TOL, counter)?
    };
    params.set(slot, outcome.quaternion)?;
    Ok(outcome)
}

pub fn rotoselect_update(
    template: &CircuitTemplate,
    params: &mut ParameterSet,
    slot: usize,
    cost: &Cost,
    counter: &mut EvalCounter,
) -> Result<UpdateOutcome> {
    update_slot(template, params, slot, cost, &MethodConfig::new(Method::Rotoselect), counter)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    /// 0 for the initial state, then 1, 2, … per update or Adam step.
    pub update_index: u64,
    pub sweep: u64,
    pub slot_id: Option<usize>,
    pub energy: f64,
    pub evals: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
}

impl Trajectory {
    pub fn final_energy(&self) -> Option<f64> {
        self.records.last().map(|r| r.energy)
    }

    /// Lowest energy among records with at most `evals` cumulative evaluations.
    pub fn best_within(&self, evals: u64) -> Option<f64> {
        self.records
            .iter()
            .filter(|r| r.evals <= evals)
            .map(|r| r.energy)
            .reduce(f64::min)
    }
}

/// Starting gates for a method: Haar gates (FQS), π rotations about uniform
/// axes (Fraxis), or uniform angles about random x/y/z axes (angle methods).
pub fn initialize<R: Rng + ?Sized>(
    method: Method,
    slots: usize,
    rng: &mut R,
) -> (ParameterSet, Option<Vec<[f64; 3]>>) {
    match method {
        Method::Fqs => (ParameterSet::random(slots, rng), None),
        Method::Fraxis => {
            let qs = (0..slots)
                .map(|_| {
                    let n = random_axis(rng);
                    Quaternion::new([0.0, n[0], n[1], n[2]]).expect("unit axis")
                })
                .collect();
            (ParameterSet::new(qs), None)
        }
        Method::Rotosolve | Method::Rotoselect => {
            let mut axes = Vec::with_capacity(slots);
            let mut qs = Vec::with_capacity(slots);
            for _ in 0..slots {
                let axis = CARTESIAN_AXES[rng.gen_range(0..3)];
                let psi = rng.gen_range(0.0..TAU);
                axes.push(axis);
                qs.push(rotation(axis, psi).expect("unit axis"));
            }
            (ParameterSet::new(qs), Some(axes))
        }
    }
}

/// Seeded starting point plus a ready config for `method`.
pub fn seeded_start(method: Method, slots: usize, seed: u64) -> (ParameterSet, MethodConfig) {
    let mut rng = seeded(seed);
    let (params, axes) = initialize(method, slots, &mut rng);
    let mut config = MethodConfig::new(method);
    if method == Method::Rotosolve {
        config.axes = axes;
    }
    (params, config)
}

/// Uncounted cost of the current parameters (logging only).
fn logged_energy(template: &CircuitTemplate, params: &ParameterSet, cost: &Cost) -> Result<f64> {
    cost.evaluate(&prepare_state(template, params)?)
}

/// Runs `sweeps` passes over every slot in ascending order, logging each update.
pub fn run_sequential(
    template: &CircuitTemplate,
    params: &mut ParameterSet,
    cost: &Cost,
    config: &MethodConfig,
    sweeps: u64,
) -> Result<Trajectory> {
    run_sequential_observed(template, params, cost, config, sweeps, |_| {})
}

/// [`run_sequential`], calling `observe` as each record is logged.
pub fn run_sequential_observed<F: FnMut(&TrajectoryRecord)>(
    template: &CircuitTemplate,
    params: &mut ParameterSet,
    cost: &Cost,
    config: &MethodConfig,
    sweeps: u64,
    mut observe: F,
) -> Result<Trajectory> {
    config.validate(template.num_slots())?;
    let mut counter = EvalCounter::new();
    let mut traj = Trajectory::default();
    traj.records.push(TrajectoryRecord {
        update_index: 0,
        sweep: 0,
        slot_id: None,
        energy: logged_energy(template, params, cost)?,
        evals: 0,
    });
    observe(&traj.records[0]);
    let mut update_index = 0;
    for sweep in 1..=sweeps {
        for slot in 0..template.num_slots() {
            let outcome = update_slot(template, params, slot, cost, config, &mut counter)?;
            update_index += 1;
            traj.records.push(TrajectoryRecord {
                update_index,
                sweep,
                slot_id: Some(slot),
                energy: outcome.energy,
                evals: counter.count(),
            });
            observe(traj.records.last().expect("just pushed"));
        }
    }
    Ok(traj)
}

/// Fixed-axis factorization of each slot for the gradient baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decomposition {
    /// `Rz(b)·Ry(a)`: two angles, Ry applied first.
    RyRz,
    /// `Rz(φ)·Ry(ϑ)·Rz(λ)`: three angles.
    RzRyRz,
}

impl Decomposition {
    pub fn angles_per_slot(self) -> usize {
        match self {
            Decomposition::RyRz => 2,
            Decomposition::RzRyRz => 3,
        }
    }

    /// Rotation axes in application order (first applied first).
    fn axes(self) -> &'static [usize] {
        match self {
            Decomposition::RyRz => &[1, 2],
            Decomposition::RzRyRz => &[2, 1, 2],
        }
    }

    /// Slot gate for `angles` (given in application order).
    pub fn gate(self, angles: &[f64]) -> Quaternion {
        self.axes()
            .iter()
            .zip(angles)
            .fold(Quaternion::IDENTITY, |acc, (&k, &a)| {
                rotation(CARTESIAN_AXES[k], a).expect("unit axis").compose(&acc)
            })
    }
}

impl fmt::Display for Decomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decomposition::RyRz => "ryrz",
            Decomposition::RzRyRz => "rzryrz",
        })
    }
}

impl FromStr for Decomposition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ryrz" => Ok(Decomposition::RyRz),
            "rzryrz" => Ok(Decomposition::RzRyRz),
            other => Err(invalid(format!("unknown decomposition {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub decomposition: Decomposition,
    pub learning_rate: f64,
    pub iterations: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn new(decomposition: Decomposition, learning_rate: f64, iterations: u64) -> Self {
        Self {
            decomposition,
            learning_rate,
            iterations,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment state of the Adam update rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    config: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(config: AdamConfig, dim: usize) -> Self {
        Self {
            config,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }

    pub fn step(&mut self, theta: &mut [f64], grad: &[f64]) {
        let c = &self.config;
        self.t += 1;
        let bc1 = 1.0 - c.beta1.powi(self.t);
        let bc2 = 1.0 - c.beta2.powi(self.t);
        for i in 0..theta.len() {
            self.m[i] = c.beta1 * self.m[i] + (1.0 - c.beta1) * grad[i];
            self.v[i] = c.beta2 * self.v[i] + (1.0 - c.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            theta[i] -= c.learning_rate * m_hat / (v_hat.sqrt() + c.epsilon);
        }
    }
}

/// Slot quaternions for a flat angle vector.
pub fn angles_to_params(decomposition: Decomposition, angles: &[f64], slots: usize) -> Result<ParameterSet> {
    let k = decomposition.angles_per_slot();
    if angles.len() != k * slots {
        return Err(Error::SizeMismatch {
            expected: k * slots,
            actual: angles.len(),
        });
    }
    Ok(ParameterSet::new(angles.chunks(k).map(|a| decomposition.gate(a)).collect()))
}

/// Exact gradient by the ±π/2 shift rule; two evaluations per angle.
pub fn parameter_shift_gradient(
    template: &CircuitTemplate,
    decomposition: Decomposition,
    angles: &[f64],
    cost: &Cost,
    counter: &mut EvalCounter,
) -> Result<Vec<f64>> {
    let k = decomposition.angles_per_slot();
    let params = angles_to_params(decomposition, angles, template.num_slots())?;
    let mut grad = vec![0.0; angles.len()];
    for slot in 0..template.num_slots() {
        let ctx = SlotContext::new(template, &params, slot, cost)?;
        let base = &angles[slot * k..(slot + 1) * k];
        for j in 0..k {
            let shifted = |delta: f64| -> Mat2 {
                let mut a = base.to_vec();
                a[j] += delta;
                decomposition.gate(&a).to_matrix()
            };
            let plus = ctx.energy_with(&shifted(FRAC_PI_2), counter)?;
            let minus = ctx.energy_with(&shifted(-FRAC_PI_2), counter)?;
            grad[slot * k + j] = 0.5 * (plus - minus);
        }
    }
    Ok(grad)
}

/// Uniform angles in `[0, 2π)`.
pub fn random_angles<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Vec<f64> {
    (0..count).map(|_| rng.gen_range(0.0..TAU)).collect()
}

/// Full-gradient Adam on the decomposed template, logging the energy after
/// every step together with the cumulative evaluation count.
pub fn adam_baseline(
    template: &CircuitTemplate,
    cost: &Cost,
    config: &AdamConfig,
    seed: u64,
) -> Result<Trajectory> {
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(invalid("learning rate must be positive and finite"));
    }
    let k = config.decomposition.angles_per_slot();
    let mut angles = random_angles(k * template.num_slots(), &mut seeded(seed));
    adam_from(template, cost, config, &mut angles)
}

/// Adam starting from the given angles, updated in place.
pub fn adam_from(
    template: &CircuitTemplate,
    cost: &Cost,
    config: &AdamConfig,
    angles: &mut [f64],
) -> Result<Trajectory> {
    adam_observed(template, cost, config, angles, |_| {})
}

/// [`adam_from`], calling `observe` as each record is logged.
pub fn adam_observed<F: FnMut(&TrajectoryRecord)>(
    template: &CircuitTemplate,
    cost: &Cost,
    config: &AdamConfig,
    angles: &mut [f64],
    mut observe: F,
) -> Result<Trajectory> {
    let mut counter = EvalCounter::new();
    let mut adam = Adam::new(*config, angles.len());
    let energy_now = |angles: &[f64]| -> Result<f64> {
        logged_energy(template, &angles_to_params(config.decomposition, angles, template.num_slots())?, cost)
    };
    let mut traj = Trajectory::default();
    traj.records.push(TrajectoryRecord {
        update_index: 0,
        sweep: 0,
        slot_id: None,
        energy: energy_now(angles)?,
        evals: 0,
    });
    observe(&traj.records[0]);
    for it in 1..=config.iterations {
        let grad = parameter_shift_gradient(template, config.decomposition, angles, cost, &mut counter)?;
        adam.step(angles, &grad);
        traj.records.push(TrajectoryRecord {
            update_index: it,
            sweep: it,
            slot_id: None,
            energy: energy_now(angles)?,
            evals: counter.count(),
        });
        observe(traj.records.last().expect("just pushed"));
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use crate::circuits::{build_template, energy, Family};
    use crate::gatealg::{phase_aligned_distance, AXIS_Y};
    use crate::linalg::pauli_mat2;
    use crate::models::{local_z_observable, mixed_field_ising};
    use crate::simcore::Observable;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn z_rig() -> (CircuitTemplate, ParameterSet, Cost) {
        let mut o = Observable::new(1);
        o.add_str(1.0, "Z").unwrap();
        (CircuitTemplate::single_slot(), ParameterSet::identity(1), Cost::Observable(o))
    }

    #[test]
    fn fqs_on_rig_gives_x() {
        let (t, mut p, c) = z_rig();
        let mut counter = EvalCounter::new();
        let out = fqs_update(&t, &mut p, 0, &c, &mut counter).unwrap();
        assert!((out.energy + 1.0).abs() < 1e-12);
        assert!(phase_aligned_distance(&out.quaternion.to_matrix(), &pauli_mat2(1)) < 1e-12);
        assert_eq!(counter.count(), 10);
    }

    #[test]
    fn rotosolve_on_rig_about_y() {
        let (t, mut p, c) = z_rig();
        let out = rotosolve_update(&t, &mut p, 0, AXIS_Y, &c, &mut EvalCounter::new()).unwrap();
        assert!((out.energy + 1.0).abs() < 1e-12);
        let expected = rotation(AXIS_Y, PI).unwrap().components();
        for (a, b) in out.quaternion.components().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn fraxis_on_rig_picks_x() {
        let (t, mut p, c) = z_rig();
        let out = fraxis_update(&t, &mut p, 0, &c, &mut EvalCounter::new()).unwrap();
        assert!((out.energy + 1.0).abs() < 1e-12);
        assert_eq!(out.quaternion.components(), [0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn rotoselect_budget_and_choice() {
        let (t, mut p, c) = z_rig();
        let mut counter = EvalCounter::new();
        let out = rotoselect_update(&t, &mut p, 0, &c, &mut counter).unwrap();
        assert_eq!(counter.count(), 7);
        assert_eq!(out.axis, Some(0));
        assert!((out.energy + 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_cost_skips() {
        let t = build_template(Family::Cyclic, 2, 1).unwrap();
        let cost = Cost::Observable(Observable::new(2).with_constant(1.5).unwrap());
        let (mut p, _) = initialize(Method::Fqs, t.num_slots(), &mut seeded(0));
        let before = p.clone();
        for m in Method::ALL {
            let (mut p2, cfg) = seeded_start(m, t.num_slots(), 1);
            let start = p2.clone();
            let out = update_slot(&t, &mut p2, 0, &cost, &cfg, &mut EvalCounter::new()).unwrap();
            assert!(out.skipped, "{m}");
            assert_eq!(p2, start);
            assert!((out.energy - 1.5).abs() < 1e-12);
        }
        fqs_update(&t, &mut p, 1, &cost, &mut EvalCounter::new()).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn sweeps_are_monotone_and_deterministic() {
        let t = build_template(Family::Alternating, 4, 2).unwrap();
        let cost = Cost::Observable(mixed_field_ising(4, 1.0, FRAC_1_SQRT_2, true).unwrap());
        for m in Method::ALL {
            let (mut p, cfg) = seeded_start(m, t.num_slots(), 3);
            let traj = run_sequential(&t, &mut p, &cost, &cfg, 3).unwrap();
            assert_eq!(traj.records.len(), 1 + 3 * 16);
            assert_eq!(traj.records[0].evals, 0);
            assert_eq!(traj.records.last().unwrap().evals, 3 * 16 * m.evals_per_update());
            for w in traj.records.windows(2) {
                assert!(w[1].energy <= w[0].energy + 1e-10, "{m}");
            }
            let final_direct = energy(&t, &p, &cost, &mut EvalCounter::new()).unwrap();
            assert!((final_direct - traj.final_energy().unwrap()).abs() < 1e-9);
            let (mut p2, cfg2) = seeded_start(m, t.num_slots(), 3);
            assert_eq!(run_sequential(&t, &mut p2, &cost, &cfg2, 3).unwrap(), traj);
        }
    }

    #[test]
    fn zero_sweeps_logs_initial_only() {
        let t = build_template(Family::Ladder, 3, 1).unwrap();
        let cost = Cost::Observable(local_z_observable(3).unwrap());
        let (mut p, cfg) = seeded_start(Method::Fqs, t.num_slots(), 0);
        let traj = run_sequential(&t, &mut p, &cost, &cfg, 0).unwrap();
        assert_eq!(traj.records.len(), 1);
    }

    #[test]
    fn rotosolve_requires_axes() {
        let t = build_template(Family::Ladder, 3, 1).unwrap();
        let cost = Cost::Observable(local_z_observable(3).unwrap());
        let mut p = ParameterSet::identity(t.num_slots());
        let cfg = MethodConfig::new(Method::Rotosolve);
        assert!(run_sequential(&t, &mut p, &cost, &cfg, 1).is_err());
        let cfg = cfg.with_axes(vec![AXIS_Y; 2]);
        assert!(run_sequential(&t, &mut p, &cost, &cfg, 1).is_err());
    }

    #[test]
    fn decomposition_gates() {
        let ryrz = Decomposition::RyRz.gate(&[0.4, 1.1]);
        let direct = crate::linalg::mat2_mul(&crate::gatealg::axis_rotation(2, 1.1), &crate::gatealg::axis_rotation(1, 0.4));
        assert!(phase_aligned_distance(&ryrz.to_matrix(), &direct) < 1e-12);
        let zyz = Decomposition::RzRyRz.gate(&[0.3, -0.8, 2.0]);
        let direct = crate::linalg::mat2_mul(
            &crate::gatealg::axis_rotation(2, 2.0),
            &crate::linalg::mat2_mul(&crate::gatealg::axis_rotation(1, -0.8), &crate::gatealg::axis_rotation(2, 0.3)),
        );
        assert!(phase_aligned_distance(&zyz.to_matrix(), &direct) < 1e-12);
    }

    #[test]
    fn parameter_shift_matches_finite_difference() {
        let t = build_template(Family::Alternating, 3, 1).unwrap();
        let cost = Cost::Observable(mixed_field_ising(3, 1.0, FRAC_1_SQRT_2, true).unwrap());
        let mut rng = seeded(77);
        for dec in [Decomposition::RyRz, Decomposition::RzRyRz] {
            let angles = random_angles(dec.angles_per_slot() * t.num_slots(), &mut rng);
            let mut counter = EvalCounter::new();
            let g = parameter_shift_gradient(&t, dec, &angles, &cost, &mut counter).unwrap();
            assert_eq!(counter.count(), 2 * angles.len() as u64);
            let f = |a: &[f64]| logged_energy(&t, &angles_to_params(dec, a, t.num_slots()).unwrap(), &cost).unwrap();
            for j in 0..angles.len() {
                let (mut up, mut dn) = (angles.clone(), angles.clone());
                up[j] += 1e-5;
                dn[j] -= 1e-5;
                assert!((g[j] - (f(&up) - f(&dn)) / 2e-5).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn adam_zero_gradient_is_a_no_op() {
        let mut adam = Adam::new(AdamConfig::new(Decomposition::RyRz, 0.1, 1), 3);
        let mut theta = vec![0.5, -1.0, 2.0];
        adam.step(&mut theta, &[0.0; 3]);
        assert_eq!(theta, vec![0.5, -1.0, 2.0]);
    }

    #[test]
    fn adam_lowers_energy_and_counts_evals() {
        let t = build_template(Family::Alternating, 3, 1).unwrap();
        let cost = Cost::Observable(mixed_field_ising(3, 1.0, FRAC_1_SQRT_2, true).unwrap());
        let cfg = AdamConfig::new(Decomposition::RyRz, 0.1, 40);
        let traj = adam_baseline(&t, &cost, &cfg, 5).unwrap();
        assert_eq!(traj.records[1].evals, 2 * 2 * t.num_slots() as u64);
        assert!(traj.final_energy().unwrap() < traj.records[0].energy);
        assert!(adam_baseline(&t, &cost, &AdamConfig::new(Decomposition::RyRz, 0.0, 1), 5).is_err());
    }

    #[test]
    fn best_within_respects_budget() {
        let traj = Trajectory {
            records: vec![
                TrajectoryRecord { update_index: 0, sweep: 0, slot_id: None, energy: 1.0, evals: 0 },
                TrajectoryRecord { update_index: 1, sweep: 1, slot_id: Some(0), energy: 0.5, evals: 10 },
                TrajectoryRecord { update_index: 2, sweep: 1, slot_id: Some(1), energy: 0.2, evals: 20 },
            ],
        };
        assert_eq!(traj.best_within(15), Some(0.5));
        assert_eq!(traj.best_within(100), Some(0.2));
    }
}
