//! Ansatz templates and circuit evaluation with one slot swapped out.
//!
//! A template is an ordered list of parameterized single-qubit slots and
//! fixed CZ entanglers. Slots are numbered in circuit order and swept in
//! ascending `slot_id`.

use crate::error::{invalid, Error, Result};
use crate::gatealg::{random_quaternion, Quaternion};
use crate::linalg::{CMat, Mat2};
use crate::models::Cost;
use crate::simcore::StateVector;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Brickwork of slot columns and CZ pairs, two columns per layer.
    Alternating,
    /// One slot column plus a closed CZ chain per layer, then a final slot column.
    Cyclic,
    /// Like `Cyclic` but the CZ chain is open.
    Ladder,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Alternating => "alternating",
            Family::Cyclic => "cyclic",
            Family::Ladder => "ladder",
        })
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "alternating" => Ok(Family::Alternating),
            "cyclic" => Ok(Family::Cyclic),
            "ladder" => Ok(Family::Ladder),
            other => Err(invalid(format!("unknown ansatz family {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GateSlot {
    pub slot_id: usize,
    pub qubit: usize,
    /// 0-based layer; the trailing column of cyclic/ladder templates has `layer == layers`.
    pub layer: usize,
    /// Slot column within the layer (always 0 except the second column of alternating layers).
    pub column: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Element {
    Slot(GateSlot),
    Cz(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitTemplate {
    family: Family,
    num_qubits: usize,
    layers: usize,
    elements: Vec<Element>,
    /// Element index of each slot.
    slot_elements: Vec<usize>,
}

pub fn build_template(family: Family, n: usize, layers: usize) -> Result<CircuitTemplate> {
    if n < 2 {
        return Err(Error::Unsupported(format!("{family} template on {n} qubit(s); need n ≥ 2")));
    }
    if layers < 1 {
        return Err(invalid("templates need at least one layer"));
    }
    let mut elements = Vec::new();
    let mut next_id = 0usize;
    let mut push_slot = |elements: &mut Vec<Element>, qubit, layer, column| {
        elements.push(Element::Slot(GateSlot {
            slot_id: next_id,
            qubit,
            layer,
            column,
        }));
        next_id += 1;
    };
    match family {
        Family::Alternating => {
            for l in 0..layers {
                for q in 0..n {
                    push_slot(&mut elements, q, l, 0);
                }
                for a in (0..n.saturating_sub(1)).step_by(2) {
                    elements.push(Element::Cz(a, a + 1));
                }
                for q in (1..n).chain(std::iter::once(0)) {
                    push_slot(&mut elements, q, l, 1);
                }
                for a in (1..n.saturating_sub(1)).step_by(2) {
                    elements.push(Element::Cz(a, a + 1));
                }
                elements.push(Element::Cz(n - 1, 0));
            }
        }
        Family::Cyclic | Family::Ladder => {
            for l in 0..layers {
                for q in 0..n {
                    push_slot(&mut elements, q, l, 0);
                }
                for a in 0..n - 1 {
                    elements.push(Element::Cz(a, a + 1));
                }
                // on two qubits the closing bond would cancel the (0,1) CZ
                if family == Family::Cyclic && n > 2 {
                    elements.push(Element::Cz(n - 1, 0));
                }
            }
            for q in 0..n {
                push_slot(&mut elements, q, layers, 0);
            }
        }
    }
    Ok(CircuitTemplate::from_elements(family, n, layers, elements))
}

impl CircuitTemplate {
    fn from_elements(family: Family, num_qubits: usize, layers: usize, elements: Vec<Element>) -> Self {
        let slot_elements = elements
            .iter()
            .enumerate()
            .filter_map(|(i, e)| matches!(e, Element::Slot(_)).then_some(i))
            .collect();
        Self {
            family,
            num_qubits,
            layers,
            elements,
            slot_elements,
        }
    }

    /// A one-qubit, one-slot circuit with no entanglers.
    pub fn single_slot() -> Self {
        let slot = GateSlot {
            slot_id: 0,
            qubit: 0,
            layer: 0,
            column: 0,
        };
        Self::from_elements(Family::Ladder, 1, 1, vec![Element::Slot(slot)])
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn num_slots(&self) -> usize {
        self.slot_elements.len()
    }

    pub fn slot(&self, slot_id: usize) -> Result<GateSlot> {
        match self.slot_elements.get(slot_id).map(|&i| self.elements[i]) {
            Some(Element::Slot(s)) => Ok(s),
            _ => Err(invalid(format!(
                "slot {slot_id} out of range (template has {} slots)",
                self.num_slots()
            ))),
        }
    }

    pub fn slots(&self) -> impl Iterator<Item = GateSlot> + '_ {
        self.slot_elements.iter().map(|&i| match self.elements[i] {
            Element::Slot(s) => s,
            Element::Cz(..) => unreachable!(),
        })
    }

    fn check_params(&self, params: &ParameterSet) -> Result<()> {
        if params.len() != self.num_slots() {
            return Err(Error::SizeMismatch {
                expected: self.num_slots(),
                actual: params.len(),
            });
        }
        Ok(())
    }

    fn apply_elements(
        &self,
        state: &mut StateVector,
        params: &ParameterSet,
        range: std::ops::Range<usize>,
    ) {
        for e in &self.elements[range] {
            match *e {
                Element::Slot(s) => state.apply_mat2(s.qubit, &params.0[s.slot_id].to_matrix()),
                Element::Cz(a, b) => state.apply_cz(a, b),
            }
        }
    }
}

/// One quaternion per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet(Vec<Quaternion>);

impl ParameterSet {
    pub fn new(quaternions: Vec<Quaternion>) -> Self {
        Self(quaternions)
    }

    pub fn identity(len: usize) -> Self {
        Self(vec![Quaternion::IDENTITY; len])
    }

    /// Haar-random gate in every slot.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Self((0..len).map(|_| random_quaternion(rng)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, slot: usize) -> Option<Quaternion> {
        self.0.get(slot).copied()
    }

    pub fn set(&mut self, slot: usize, q: Quaternion) -> Result<()> {
        let len = self.0.len();
        *self
            .0
            .get_mut(slot)
            .ok_or_else(|| invalid(format!("slot {slot} out of range ({len} slots)")))? = q;
        Ok(())
    }

    pub fn as_slice(&self) -> &[Quaternion] {
        &self.0
    }
}

/// Number of cost evaluations spent so far.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct EvalCounter(u64);

impl EvalCounter {
    pub fn new() -> Self {
        Self(0)
    }

    pub fn count(&self) -> u64 {
        self.0
    }

    pub fn increment(&mut self) {
        self.0 += 1;
    }
}

/// `U(params)|0…0⟩`.
pub fn prepare_state(template: &CircuitTemplate, params: &ParameterSet) -> Result<StateVector> {
    template.check_params(params)?;
    let mut state = StateVector::zero(template.num_qubits);
    template.apply_elements(&mut state, params, 0..template.elements.len());
    Ok(state)
}

/// Cost at the current parameters; counts as one evaluation.
pub fn energy(
    template: &CircuitTemplate,
    params: &ParameterSet,
    cost: &Cost,
    counter: &mut EvalCounter,
) -> Result<f64> {
    check_cost(template.num_qubits, cost)?;
    let state = prepare_state(template, params)?;
    counter.increment();
    cost.evaluate(&state)
}

/// Cost with slot `slot`'s gate replaced by `replacement`; counts as one evaluation.
pub fn energy_with_replacement(
    template: &CircuitTemplate,
    params: &ParameterSet,
    slot: usize,
    replacement: &Mat2,
    cost: &Cost,
    counter: &mut EvalCounter,
) -> Result<f64> {
    let ctx = SlotContext::new(template, params, slot, cost)?;
    check_replacement(replacement)?;
    ctx.energy_with(replacement, counter)
}

fn check_cost(n: usize, cost: &Cost) -> Result<()> {
    if cost.num_qubits() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            actual: cost.num_qubits(),
        });
    }
    Ok(())
}

fn check_replacement(m: &Mat2) -> Result<()> {
    let deviation = CMat::from_mat2(m).unitarity_deviation();
    if !(deviation <= 1e-8) {
        return Err(Error::NonUnitary { deviation });
    }
    Ok(())
}

/// Cost as a function of the gate in one slot, everything else held fixed.
pub trait SlotObjective {
    /// Evaluates the cost with `gate` in the probed slot; increments `counter` once.
    fn energy_with(&self, gate: &Mat2, counter: &mut EvalCounter) -> Result<f64>;
}

/// A template slot with the state just before it cached.
#[derive(Debug, Clone)]
pub struct SlotContext<'a> {
    template: &'a CircuitTemplate,
    params: &'a ParameterSet,
    cost: &'a Cost,
    slot: GateSlot,
    element: usize,
    prefix: StateVector,
}

impl<'a> SlotContext<'a> {
    pub fn new(
        template: &'a CircuitTemplate,
        params: &'a ParameterSet,
        slot: usize,
        cost: &'a Cost,
    ) -> Result<Self> {
        template.check_params(params)?;
        check_cost(template.num_qubits, cost)?;
        let info = template.slot(slot)?;
        let element = template.slot_elements[slot];
        let mut prefix = StateVector::zero(template.num_qubits);
        template.apply_elements(&mut prefix, params, 0..element);
        Ok(Self {
            template,
            params,
            cost,
            slot: info,
            element,
            prefix,
        })
    }

    pub fn slot(&self) -> GateSlot {
        self.slot
    }
}

impl SlotObjective for SlotContext<'_> {
    fn energy_with(&self, gate: &Mat2, counter: &mut EvalCounter) -> Result<f64> {
        let mut state = self.prefix.clone();
        state.apply_mat2(self.slot.qubit, gate);
        self.template
            .apply_elements(&mut state, self.params, self.element + 1..self.template.elements.len());
        counter.increment();
        self.cost.evaluate(&state)
    }
}

/// Qubits reachable from `start` through the multi-qubit operations in `ops`,
/// scanned in the given order.
fn causal_closure<'a, I>(start: &BTreeSet<usize>, ops: I) -> BTreeSet<usize>
where
    I: Iterator<Item = &'a [usize]>,
{
    let mut reach = start.clone();
    for op in ops {
        if op.iter().any(|q| reach.contains(q)) {
            reach.extend(op.iter().copied());
        }
    }
    reach
}

/// Forward and backward light cones of the 2-qubit block holding a slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LightCones {
    pub block_qubits: Vec<usize>,
    /// 1-based block layer of the block.
    pub block_layer: usize,
    pub forward: Vec<usize>,
    pub backward: Vec<usize>,
    /// Indices `k` whose pair `{2k, 2k+1}` lies wholly inside the backward cone.
    pub subsystems: Vec<usize>,
    /// Contiguous runs `(k, k')`, `k ≤ k'`, of `subsystems`.
    pub subsystem_ranges: Vec<(usize, usize)>,
}

impl LightCones {
    fn assemble(n: usize, block_qubits: Vec<usize>, block_layer: usize, forward: BTreeSet<usize>, backward: BTreeSet<usize>) -> Self {
        let subsystems: Vec<usize> = (0..n / 2)
            .filter(|k| backward.contains(&(2 * k)) && backward.contains(&(2 * k + 1)))
            .collect();
        let mut subsystem_ranges = Vec::new();
        for (i, &k) in subsystems.iter().enumerate() {
            for (j, &k2) in subsystems.iter().enumerate().skip(i) {
                if k2 - k != j - i {
                    break;
                }
                subsystem_ranges.push((k, k2));
            }
        }
        Self {
            block_qubits,
            block_layer,
            forward: forward.into_iter().collect(),
            backward: backward.into_iter().collect(),
            subsystems,
            subsystem_ranges,
        }
    }

    /// Whether every qubit of `support` lies in the forward cone.
    pub fn covers(&self, support: &[usize]) -> bool {
        support.iter().all(|q| self.forward.contains(q))
    }
}

/// Light cones of the block containing `slot_id` in an alternating template.
///
/// A slot's block is the CZ pair that follows it in its column; template
/// layer `l`, column `c` is block layer `2l + c + 1`.
pub fn light_cones(template: &CircuitTemplate, slot_id: usize) -> Result<LightCones> {
    if template.family != Family::Alternating {
        return Err(Error::Unsupported(format!(
            "light cones for the {} family",
            template.family
        )));
    }
    let slot = template.slot(slot_id)?;
    let at = template.slot_elements[slot_id];
    // the block's CZ is the first later entangler on this qubit
    let cz = template.elements[at..]
        .iter()
        .position(|e| matches!(e, Element::Cz(a, b) if *a == slot.qubit || *b == slot.qubit))
        .map(|p| p + at);
    let block: BTreeSet<usize> = match cz.map(|i| template.elements[i]) {
        Some(Element::Cz(a, b)) if column_of(template, cz.unwrap()) == Some((slot.layer, slot.column)) => {
            [a, b].into_iter().collect()
        }
        _ => [slot.qubit].into_iter().collect(),
    };
    let pairs = |range: std::ops::Range<usize>| -> Vec<[usize; 2]> {
        template.elements[range]
            .iter()
            .filter_map(|e| match *e {
                Element::Cz(a, b) => Some([a, b]),
                Element::Slot(_) => None,
            })
            .collect()
    };
    let after = cz.filter(|_| block.len() == 2).map_or(at + 1, |i| i + 1);
    let later = pairs(after..template.elements.len());
    let earlier = pairs(0..at);
    let forward = causal_closure(&block, later.iter().map(|p| &p[..]));
    let backward = causal_closure(&block, earlier.iter().rev().map(|p| &p[..]));
    Ok(LightCones::assemble(
        template.num_qubits,
        block.iter().copied().collect(),
        2 * slot.layer + slot.column + 1,
        forward,
        backward,
    ))
}

/// Layer and column owning element `index`, judged by the nearest preceding slot.
fn column_of(template: &CircuitTemplate, index: usize) -> Option<(usize, usize)> {
    template.elements[..=index].iter().rev().find_map(|e| match e {
        Element::Slot(s) => Some((s.layer, s.column)),
        Element::Cz(..) => None,
    })
}

/// Block pairs of block layer `layer` (1-based) on `n` qubits.
///
/// Odd layers pair `(0,1), (2,3), …`; even layers pair `(1,2), (3,4), …`
/// and close with `(n−1, 0)`.
pub fn block_pairs(n: usize, layer: usize) -> Vec<(usize, usize)> {
    if layer % 2 == 1 {
        (0..n / 2).map(|k| (2 * k, 2 * k + 1)).collect()
    } else {
        let mut v: Vec<(usize, usize)> = (1..n.saturating_sub(1)).step_by(2).map(|a| (a, a + 1)).collect();
        v.push((n - 1, 0));
        v
    }
}

#[derive(Debug, Clone)]
pub struct Block {
    pub layer: usize,
    pub qubits: (usize, usize),
    pub unitary: CMat,
}

/// Layered brickwork of Haar-random 2-qubit blocks with one probed gate.
///
/// The probed block is `W_after · (R on its first qubit) · W_before`; every
/// other block and both halves of the probed block are independent Haar draws.
#[derive(Debug, Clone)]
pub struct BlockCircuit {
    num_qubits: usize,
    layers: usize,
    blocks: Vec<Block>,
    probe: usize,
    before: CMat,
    after: CMat,
}

impl BlockCircuit {
    /// Draws a circuit with `layers` block layers, probing block `position`
    /// of block layer `probe_layer` (1-based).
    pub fn random<R: Rng + ?Sized>(
        n: usize,
        layers: usize,
        probe_layer: usize,
        position: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::Unsupported(format!("block circuits need even n ≥ 2, got {n}")));
        }
        if !(1..=layers).contains(&probe_layer) {
            return Err(invalid(format!("probe layer {probe_layer} outside 1..={layers}")));
        }
        let mut blocks = Vec::new();
        let mut probe = None;
        for layer in 1..=layers {
            for (k, qubits) in block_pairs(n, layer).into_iter().enumerate() {
                if layer == probe_layer && k == position {
                    probe = Some(blocks.len());
                }
                blocks.push(Block {
                    layer,
                    qubits,
                    unitary: crate::randhaar::haar_unitary(4, rng),
                });
            }
        }
        let probe = probe.ok_or_else(|| invalid(format!("no block {position} in layer {probe_layer}")))?;
        let before = crate::randhaar::haar_unitary(4, rng);
        let after = crate::randhaar::haar_unitary(4, rng);
        Ok(Self {
            num_qubits: n,
            layers,
            blocks,
            probe,
            before,
            after,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn probe_block(&self) -> &Block {
        &self.blocks[self.probe]
    }

    pub fn light_cones(&self) -> LightCones {
        let b = &self.blocks[self.probe];
        let start: BTreeSet<usize> = [b.qubits.0, b.qubits.1].into_iter().collect();
        let ops: Vec<[usize; 2]> = self.blocks.iter().map(|b| [b.qubits.0, b.qubits.1]).collect();
        let later = ops[self.probe + 1..].iter().zip(&self.blocks[self.probe + 1..]);
        let forward = causal_closure(&start, later.filter(|(_, blk)| blk.layer > b.layer).map(|(p, _)| &p[..]));
        let earlier = ops[..self.probe].iter().zip(&self.blocks[..self.probe]).rev();
        let backward = causal_closure(&start, earlier.filter(|(_, blk)| blk.layer < b.layer).map(|(p, _)| &p[..]));
        LightCones::assemble(self.num_qubits, vec![b.qubits.0, b.qubits.1], b.layer, forward, backward)
    }

    /// Objective over the probed gate for a given input state and cost.
    pub fn objective<'a>(&'a self, input: &StateVector, cost: &'a Cost) -> Result<BlockObjective<'a>> {
        check_cost(self.num_qubits, cost)?;
        if input.num_qubits() != self.num_qubits {
            return Err(Error::SizeMismatch {
                expected: self.num_qubits,
                actual: input.num_qubits(),
            });
        }
        let mut prefix = input.clone();
        for b in &self.blocks[..self.probe] {
            prefix.apply_two_qubit(b.qubits.0, b.qubits.1, &b.unitary);
        }
        // blocks sharing the probe's layer act on disjoint qubits and commute with it
        let probe_layer = self.blocks[self.probe].layer;
        let same_layer_after = self.probe + 1
            + self.blocks[self.probe + 1..].iter().take_while(|b| b.layer == probe_layer).count();
        for b in &self.blocks[self.probe + 1..same_layer_after] {
            prefix.apply_two_qubit(b.qubits.0, b.qubits.1, &b.unitary);
        }
        let (q0, q1) = self.blocks[self.probe].qubits;
        prefix.apply_two_qubit(q0, q1, &self.before);
        Ok(BlockObjective {
            circuit: self,
            cost,
            prefix,
            rest: same_layer_after,
        })
    }
}

pub struct BlockObjective<'a> {
    circuit: &'a BlockCircuit,
    cost: &'a Cost,
    prefix: StateVector,
    rest: usize,
}

impl SlotObjective for BlockObjective<'_> {
    fn energy_with(&self, gate: &Mat2, counter: &mut EvalCounter) -> Result<f64> {
        let (q0, q1) = self.circuit.blocks[self.circuit.probe].qubits;
        let mut state = self.prefix.clone();
        state.apply_mat2(q0, gate);
        state.apply_two_qubit(q0, q1, &self.circuit.after);
        for b in &self.circuit.blocks[self.rest..] {
            state.apply_two_qubit(b.qubits.0, b.qubits.1, &b.unitary);
        }
        counter.increment();
        self.cost.evaluate(&state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gatealg::random_quaternion;
    use crate::linalg::{mat2_identity, pauli_mat2};
    use crate::models::{local_z_observable, mixed_field_ising};
    use crate::randhaar::seeded;
    use crate::simcore::Observable;

    fn z1() -> Cost {
        let mut o = Observable::new(1);
        o.add_str(1.0, "Z").unwrap();
        Cost::Observable(o)
    }

    fn czs(t: &CircuitTemplate) -> Vec<(usize, usize)> {
        t.elements()
            .iter()
            .filter_map(|e| match e {
                Element::Cz(a, b) => Some((*a, *b)),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn slot_counts() {
        assert_eq!(build_template(Family::Alternating, 4, 2).unwrap().num_slots(), 16);
        assert_eq!(build_template(Family::Cyclic, 5, 1).unwrap().num_slots(), 10);
        assert_eq!(build_template(Family::Ladder, 5, 1).unwrap().num_slots(), 10);
        for n in 2..7 {
            for l in 1..5 {
                assert_eq!(build_template(Family::Alternating, n, l).unwrap().num_slots(), 2 * n * l);
                assert_eq!(build_template(Family::Cyclic, n, l).unwrap().num_slots(), n * (l + 1));
            }
        }
        assert!(build_template(Family::Cyclic, 1, 1).is_err());
        assert!(build_template(Family::Cyclic, 3, 0).is_err());
    }

    #[test]
    fn entangler_placement() {
        let ladder = build_template(Family::Ladder, 5, 1).unwrap();
        assert_eq!(czs(&ladder), vec![(0, 1), (1, 2), (2, 3), (3, 4)]);
        let cyclic = build_template(Family::Cyclic, 5, 1).unwrap();
        assert_eq!(czs(&cyclic), vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
        let alt = build_template(Family::Alternating, 4, 1).unwrap();
        assert_eq!(czs(&alt), vec![(0, 1), (2, 3), (1, 2), (3, 0)]);
        let alt5 = build_template(Family::Alternating, 5, 1).unwrap();
        assert_eq!(czs(&alt5), vec![(0, 1), (2, 3), (1, 2), (3, 4), (4, 0)]);
        let second: Vec<usize> = alt.slots().filter(|s| s.column == 1).map(|s| s.qubit).collect();
        assert_eq!(second, vec![1, 2, 3, 0]);
    }

    #[test]
    fn slot_ids_are_dense_and_ordered() {
        let t = build_template(Family::Alternating, 5, 3).unwrap();
        let ids: Vec<usize> = t.slots().map(|s| s.slot_id).collect();
        assert_eq!(ids, (0..30).collect::<Vec<_>>());
        assert!(t.slot(30).is_err());
    }

    #[test]
    fn identity_params_leave_zero_state() {
        let t = build_template(Family::Alternating, 4, 2).unwrap();
        let s = prepare_state(&t, &ParameterSet::identity(16)).unwrap();
        assert_eq!(s, StateVector::zero(4));
        assert!(prepare_state(&t, &ParameterSet::identity(3)).is_err());
    }

    #[test]
    fn single_slot_rig() {
        let t = CircuitTemplate::single_slot();
        let x = ParameterSet::new(vec![Quaternion::new([0.0, 1.0, 0.0, 0.0]).unwrap()]);
        let s = prepare_state(&t, &x).unwrap();
        assert!((s.amplitudes()[1].norm() - 1.0).abs() < 1e-15);
        let mut c = EvalCounter::new();
        let e = energy_with_replacement(&t, &ParameterSet::identity(1), 0, &pauli_mat2(1), &z1(), &mut c).unwrap();
        assert_eq!(e, -1.0);
        assert_eq!(c.count(), 1);
    }

    #[test]
    fn self_replacement_matches_plain_energy() {
        let t = build_template(Family::Alternating, 4, 2).unwrap();
        let cost = Cost::Observable(mixed_field_ising(4, 1.0, 0.5, true).unwrap());
        let mut rng = seeded(3);
        let p = ParameterSet::random(t.num_slots(), &mut rng);
        let mut c = EvalCounter::new();
        let base = energy(&t, &p, &cost, &mut c).unwrap();
        for d in 0..t.num_slots() {
            let gate = p.get(d).unwrap().to_matrix();
            let e = energy_with_replacement(&t, &p, d, &gate, &cost, &mut c).unwrap();
            assert!((e - base).abs() < 1e-12);
        }
        assert_eq!(c.count(), 1 + 16);
        let bad = [[pauli_mat2(0)[0][0] * 2.0, pauli_mat2(0)[0][1]], pauli_mat2(0)[1]];
        assert!(energy_with_replacement(&t, &p, 0, &bad, &cost, &mut c).is_err());
        assert!(energy_with_replacement(&t, &p, 99, &mat2_identity(), &cost, &mut c).is_err());
    }

    /// Reachability oracle on the DAG whose nodes are CZ elements and whose
    /// edges join each CZ to the next CZ on either of its qubits.
    fn dag_forward(t: &CircuitTemplate, from_element: usize) -> BTreeSet<usize> {
        let cz: Vec<(usize, usize, usize)> = t
            .elements()
            .iter()
            .enumerate()
            .filter_map(|(i, e)| match *e {
                Element::Cz(a, b) => Some((i, a, b)),
                _ => None,
            })
            .collect();
        let mut seen = vec![false; cz.len()];
        let mut queue: Vec<usize> = cz.iter().position(|c| c.0 == from_element).into_iter().collect();
        while let Some(node) = queue.pop() {
            if std::mem::replace(&mut seen[node], true) {
                continue;
            }
            let (_, a, b) = cz[node];
            for q in [a, b] {
                if let Some(next) = (node + 1..cz.len()).find(|&j| cz[j].1 == q || cz[j].2 == q) {
                    queue.push(next);
                }
            }
        }
        cz.iter().zip(&seen).filter(|(_, s)| **s).flat_map(|(c, _)| [c.1, c.2]).collect()
    }

    #[test]
    fn light_cone_examples() {
        let t = build_template(Family::Alternating, 4, 1).unwrap();
        // last column slot on qubit 1 belongs to block (1,2) with no later gates
        let lc = light_cones(&t, 4).unwrap();
        assert_eq!(lc.block_qubits, vec![1, 2]);
        assert_eq!(lc.forward, vec![1, 2]);
        // first-column slot in a single-layer template: backward is its own pair
        let lc = light_cones(&t, 0).unwrap();
        assert_eq!(lc.block_qubits, vec![0, 1]);
        assert_eq!(lc.backward, vec![0, 1]);
        assert_eq!(lc.subsystems, vec![0]);
        assert_eq!(lc.subsystem_ranges, vec![(0, 0)]);
        assert_eq!(lc.block_layer, 1);

        for (n, layers) in [(6, 2), (8, 2), (10, 3)] {
            let t = build_template(Family::Alternating, n, layers).unwrap();
            for slot in t.slots().filter(|s| s.column == 0 && s.qubit % 2 == 0) {
                let lc = light_cones(&t, slot.slot_id).unwrap();
                let block_cz = t.slot_elements[slot.slot_id]
                    + t.elements()[t.slot_elements[slot.slot_id]..]
                        .iter()
                        .position(|e| matches!(e, Element::Cz(a, _) if *a == slot.qubit))
                        .unwrap();
                let oracle: Vec<usize> = dag_forward(&t, block_cz).into_iter().collect();
                assert_eq!(lc.forward, oracle, "n={n} slot={}", slot.slot_id);
            }
        }
        assert!(light_cones(&build_template(Family::Cyclic, 4, 1).unwrap(), 0).is_err());
    }

    #[test]
    fn forward_cone_grows_two_qubits_per_block_layer() {
        let t = build_template(Family::Alternating, 12, 2).unwrap();
        let lc = light_cones(&t, 4).unwrap();
        // block (4,5) in block layer 1, followed by three more block layers
        assert_eq!(lc.block_qubits, vec![4, 5]);
        assert_eq!(lc.forward, (1..=8).collect::<Vec<_>>());
    }

    #[test]
    fn block_circuit_light_cones_and_budget() {
        let mut rng = seeded(4);
        let bc = BlockCircuit::random(4, 2, 1, 0, &mut rng).unwrap();
        let lc = bc.light_cones();
        assert_eq!(lc.forward, vec![0, 1, 2, 3]);
        assert_eq!(lc.backward, vec![0, 1]);
        assert_eq!(lc.subsystem_ranges, vec![(0, 0)]);
        let cost = Cost::Observable(local_z_observable(4).unwrap());
        let obj = bc.objective(&StateVector::zero(4), &cost).unwrap();
        let mut c = EvalCounter::new();
        let e = obj.energy_with(&random_quaternion(&mut rng).to_matrix(), &mut c).unwrap();
        assert!(e.abs() <= 1.0 + 1e-12);
        assert_eq!(c.count(), 1);
        assert!(BlockCircuit::random(3, 2, 1, 0, &mut rng).is_err());
        assert!(BlockCircuit::random(4, 2, 3, 0, &mut rng).is_err());
    }

    #[test]
    fn block_objective_matches_dense_product() {
        let mut rng = seeded(10);
        let bc = BlockCircuit::random(4, 3, 2, 1, &mut rng).unwrap();
        let cost = Cost::Observable(local_z_observable(4).unwrap());
        let gate = random_quaternion(&mut rng).to_matrix();
        let obj = bc.objective(&StateVector::zero(4), &cost).unwrap();
        let e = obj.energy_with(&gate, &mut EvalCounter::new()).unwrap();
        // oracle: apply every block in order, expanding the probe in place
        let mut s = StateVector::zero(4);
        for (i, b) in bc.blocks.iter().enumerate() {
            if i == bc.probe {
                s.apply_gate(&[b.qubits.0, b.qubits.1], &bc.before).unwrap();
                s.apply_gate(&[b.qubits.0], &CMat::from_mat2(&gate)).unwrap();
                s.apply_gate(&[b.qubits.0, b.qubits.1], &bc.after).unwrap();
            } else {
                s.apply_gate(&[b.qubits.0, b.qubits.1], &b.unitary).unwrap();
            }
        }
        assert!((cost.evaluate(&s).unwrap() - e).abs() < 1e-12);
    }

    #[test]
    fn family_parse_round_trip() {
        for f in [Family::Alternating, Family::Cyclic, Family::Ladder] {
            assert_eq!(f.to_string().parse::<Family>().unwrap(), f);
        }
        assert!("brick".parse::<Family>().is_err());
    }
}
