//! Reversible gate IR.
//!
//! A [`Circuit`] is a flat list of [`Instruction`]s over a fixed qubit pool
//! and classical-bit pool. Every instruction carries a hierarchical label such
//! as `"c_m(M_a)/M[0]/MF/A[1]/XAN+/AN/FA"`; gate counts can be aggregated at any
//! prefix of that path, and the distributed executor uses the leaf label to
//! group gates into non-local blocks.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rustc_hash::FxHashSet;

use crate::error::{Error, Result};
use crate::gate::{Control, GateKind, Qubit};
use crate::qstate::{QuantumState, RandomSource};

pub const MAX_CONTROLS: usize = 5;

/// Index of a classical bit written by a measurement.
pub type ClassicalBit = usize;

/// Classical condition guarding a gate.
#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    Always,
    /// A bit of a precomputed classical constant: the gate is part of the
    /// circuit (and counted) but only acts when the bit is 1.
    Constant(bool),
    /// Fires when the XOR of the listed measured bits is 1.
    Parity(Vec<ClassicalBit>),
}

impl Condition {
    pub fn is_quantum_reversible(&self) -> bool {
        !matches!(self, Condition::Parity(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operation {
    Gate {
        kind: GateKind,
        targets: Vec<Qubit>,
        controls: Vec<Control>,
    },
    Measure {
        qubit: Qubit,
        bit: ClassicalBit,
    },
    /// Classically controlled X on `qubit` using the bit its measurement wrote.
    ResetToZero {
        qubit: Qubit,
        bit: ClassicalBit,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instruction {
    pub op: Operation,
    pub condition: Condition,
    pub label: Arc<str>,
    /// Qubit whose home node executes this instruction when distributed.
    pub anchor: Option<Qubit>,
    /// Executes inside the neighbouring non-local block on the same node
    /// instead of opening a block of its own.
    pub fused: bool,
}

impl Instruction {
    pub fn gate(kind: GateKind, targets: &[Qubit], controls: &[Control]) -> Self {
        Instruction {
            op: Operation::Gate {
                kind,
                targets: targets.to_vec(),
                controls: controls.to_vec(),
            },
            condition: Condition::Always,
            label: Arc::from(""),
            anchor: None,
            fused: false,
        }
    }

    pub fn measure(qubit: Qubit, bit: ClassicalBit) -> Self {
        Instruction {
            op: Operation::Measure { qubit, bit },
            ..Self::gate(GateKind::X, &[], &[])
        }
    }

    pub fn reset(qubit: Qubit, bit: ClassicalBit) -> Self {
        Instruction {
            op: Operation::ResetToZero { qubit, bit },
            ..Self::gate(GateKind::X, &[], &[])
        }
    }

    pub fn when(mut self, condition: Condition) -> Self {
        self.condition = condition;
        self
    }

    pub fn labelled(mut self, label: &str) -> Self {
        self.label = Arc::from(label);
        self
    }

    pub fn anchored(mut self, qubit: Qubit) -> Self {
        self.anchor = Some(qubit);
        self
    }

    pub fn fused(mut self) -> Self {
        self.fused = true;
        self
    }

    pub fn is_gate(&self) -> bool {
        matches!(self.op, Operation::Gate { .. })
    }

    /// All qubits the instruction touches (targets first, then controls).
    pub fn qubits(&self) -> Vec<Qubit> {
        match &self.op {
            Operation::Gate { targets, controls, .. } => targets
                .iter()
                .copied()
                .chain(controls.iter().map(|c| c.qubit))
                .collect(),
            Operation::Measure { qubit, .. } | Operation::ResetToZero { qubit, .. } => {
                vec![*qubit]
            }
        }
    }

    fn inverse(&self) -> Result<Instruction> {
        match &self.op {
            Operation::Gate {
                kind,
                targets,
                controls,
            } if self.condition.is_quantum_reversible() => Ok(Instruction {
                op: Operation::Gate {
                    kind: kind.inverse(),
                    targets: targets.clone(),
                    controls: controls.clone(),
                },
                ..self.clone()
            }),
            _ => Err(Error::NotReversible(format!(
                "instruction `{}` depends on measurement",
                dump_line(self)
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    instructions: Vec<Instruction>,
    num_qubits: usize,
    num_classical_bits: usize,
    label: String,
    written: Vec<bool>,
}

impl Circuit {
    pub fn new(num_qubits: usize, label: &str) -> Self {
        Circuit {
            instructions: Vec::new(),
            num_qubits,
            num_classical_bits: 0,
            label: label.to_string(),
            written: Vec::new(),
        }
    }

    pub fn with_classical_bits(mut self, bits: usize) -> Self {
        self.num_classical_bits = bits;
        self.written.resize(bits, false);
        self
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_classical_bits(&self) -> usize {
        self.num_classical_bits
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    fn check_qubit(&self, q: Qubit) -> Result<()> {
        if q.0 >= self.num_qubits {
            return Err(Error::QubitOutOfRange {
                qubit: q.0,
                allocated: self.num_qubits,
            });
        }
        Ok(())
    }

    fn check_bit(&self, bit: ClassicalBit, must_be_written: bool) -> Result<()> {
        if bit >= self.num_classical_bits || (must_be_written && !self.written[bit]) {
            return Err(Error::UnwrittenBit(bit));
        }
        Ok(())
    }

    /// Appends one instruction after validating ids, arity and control count.
    pub fn push(&mut self, instruction: Instruction) -> Result<()> {
        match &instruction.op {
            Operation::Gate {
                kind,
                targets,
                controls,
            } => {
                kind.validate()?;
                if targets.len() != kind.arity() {
                    return Err(Error::ArityMismatch {
                        gate: if *kind == GateKind::Swap {
                            "SWAP"
                        } else {
                            "single-qubit gate"
                        },
                        expected: kind.arity(),
                        got: targets.len(),
                    });
                }
                if controls.len() > MAX_CONTROLS {
                    return Err(Error::TooManyControls(controls.len()));
                }
                let mut seen = FxHashSet::default();
                for q in instruction.qubits() {
                    self.check_qubit(q)?;
                    if !seen.insert(q) {
                        return Err(Error::DuplicateQubit(q.0));
                    }
                }
            }
            Operation::Measure { qubit, bit } => {
                self.check_qubit(*qubit)?;
                self.check_bit(*bit, false)?;
            }
            Operation::ResetToZero { qubit, bit } => {
                self.check_qubit(*qubit)?;
                self.check_bit(*bit, true)?;
            }
        }
        if let Condition::Parity(bits) = &instruction.condition {
            for &b in bits {
                self.check_bit(b, true)?;
            }
        }
        if let Some(anchor) = instruction.anchor {
            self.check_qubit(anchor)?;
        }
        if let Operation::Measure { bit, .. } = instruction.op {
            self.written[bit] = true;
        }
        self.instructions.push(instruction);
        Ok(())
    }

    pub fn gate(&mut self, kind: GateKind, targets: &[Qubit], controls: &[Control]) -> Result<()> {
        self.push(Instruction::gate(kind, targets, controls))
    }

    pub fn x(&mut self, target: Qubit) -> Result<()> {
        self.gate(GateKind::X, &[target], &[])
    }

    pub fn h(&mut self, target: Qubit) -> Result<()> {
        self.gate(GateKind::H, &[target], &[])
    }

    pub fn cnot(&mut self, control: Qubit, target: Qubit) -> Result<()> {
        self.gate(GateKind::X, &[target], &[Control::pos(control)])
    }

    pub fn toffoli(&mut self, c1: Qubit, c2: Qubit, target: Qubit) -> Result<()> {
        self.gate(GateKind::X, &[target], &[Control::pos(c1), Control::pos(c2)])
    }

    pub fn swap(&mut self, a: Qubit, b: Qubit) -> Result<()> {
        self.gate(GateKind::Swap, &[a, b], &[])
    }

    pub fn measure(&mut self, qubit: Qubit, bit: ClassicalBit) -> Result<()> {
        self.push(Instruction::measure(qubit, bit))
    }

    /// Appends `child`, prefixing each of its labels with `prefix/`.
    pub fn append_nested(&mut self, prefix: &str, child: &Circuit) -> Result<()> {
        self.append_mapped(child, |label| {
            if label.is_empty() {
                prefix.to_string()
            } else if prefix.is_empty() {
                label.to_string()
            } else {
                format!("{prefix}/{label}")
            }
        })
    }

    /// Appends `child` with its labels unchanged.
    pub fn append(&mut self, child: &Circuit) -> Result<()> {
        self.append_nested("", child)
    }

    fn append_mapped(&mut self, child: &Circuit, relabel: impl Fn(&str) -> String) -> Result<()> {
        if child.num_qubits > self.num_qubits {
            return Err(Error::WidthMismatch(format!(
                "cannot append a {}-qubit circuit to a {}-qubit circuit",
                child.num_qubits, self.num_qubits
            )));
        }
        if child.num_classical_bits > self.num_classical_bits {
            self.num_classical_bits = child.num_classical_bits;
            self.written.resize(child.num_classical_bits, false);
        }
        let mut cache: BTreeMap<Arc<str>, Arc<str>> = BTreeMap::new();
        for instr in &child.instructions {
            let label = cache
                .entry(instr.label.clone())
                .or_insert_with(|| Arc::from(relabel(&instr.label)))
                .clone();
            self.push(Instruction { label, ..instr.clone() })?;
        }
        Ok(())
    }

    /// Replaces every label with `label`.
    pub fn relabel(mut self, label: &str) -> Self {
        let shared: Arc<str> = Arc::from(label);
        for instr in &mut self.instructions {
            instr.label = shared.clone();
        }
        self
    }

    /// Sets the anchor of every instruction that has none yet.
    pub fn anchor_all(mut self, qubit: Qubit) -> Self {
        for instr in &mut self.instructions {
            instr.anchor.get_or_insert(qubit);
        }
        self
    }

    /// Instructions in reverse order, each gate replaced by its inverse.
    pub fn reverse(&self) -> Result<Circuit> {
        let mut out = Circuit {
            instructions: Vec::with_capacity(self.instructions.len()),
            ..self.clone_empty()
        };
        for instr in self.instructions.iter().rev() {
            out.instructions.push(instr.inverse()?);
        }
        Ok(out)
    }

    fn clone_empty(&self) -> Circuit {
        Circuit {
            instructions: Vec::new(),
            num_qubits: self.num_qubits,
            num_classical_bits: self.num_classical_bits,
            label: self.label.clone(),
            written: self.written.clone(),
        }
    }

    /// Every gate gains `extra` controls.
    pub fn add_controls(&self, extra: &[Control]) -> Result<Circuit> {
        let used: FxHashSet<Qubit> = self.instructions.iter().flat_map(|i| i.qubits()).collect();
        let mut distinct = FxHashSet::default();
        for c in extra {
            self.check_qubit(c.qubit)?;
            if used.contains(&c.qubit) {
                return Err(Error::ControlCollision(c.qubit.0));
            }
            if !distinct.insert(c.qubit) {
                return Err(Error::DuplicateQubit(c.qubit.0));
            }
        }
        let mut out = self.clone_empty();
        for instr in &self.instructions {
            match &instr.op {
                Operation::Gate {
                    kind,
                    targets,
                    controls,
                } => {
                    let total = controls.len() + extra.len();
                    if total > MAX_CONTROLS {
                        return Err(Error::TooManyControls(total));
                    }
                    let mut all = controls.clone();
                    all.extend_from_slice(extra);
                    out.instructions.push(Instruction {
                        op: Operation::Gate {
                            kind: *kind,
                            targets: targets.clone(),
                            controls: all,
                        },
                        ..instr.clone()
                    });
                }
                _ => return Err(Error::NotReversible("cannot add controls to a measurement".into())),
            }
        }
        Ok(out)
    }

    /// Runs the circuit, returning the measurement outcomes in program order.
    pub fn execute(&self, state: &mut QuantumState, rng: &mut RandomSource) -> Result<Vec<bool>> {
        if state.num_qubits() < self.num_qubits {
            return Err(Error::QubitOutOfRange {
                qubit: self.num_qubits.saturating_sub(1),
                allocated: state.num_qubits(),
            });
        }
        let mut bits = vec![None; self.num_classical_bits];
        let mut transcript = Vec::new();
        for instr in &self.instructions {
            let fires = match &instr.condition {
                Condition::Always => true,
                Condition::Constant(bit) => *bit,
                Condition::Parity(list) => {
                    let mut acc = false;
                    for &b in list {
                        acc ^= bits[b].ok_or(Error::UnwrittenBit(b))?;
                    }
                    acc
                }
            };
            if !fires {
                continue;
            }
            match &instr.op {
                Operation::Gate {
                    kind,
                    targets,
                    controls,
                } => state.apply_gate(*kind, targets, controls)?,
                Operation::Measure { qubit, bit } => {
                    let outcome = state.measure(*qubit, rng)?;
                    bits[*bit] = Some(outcome);
                    transcript.push(outcome);
                }
                Operation::ResetToZero { qubit, bit } => {
                    if bits[*bit].ok_or(Error::UnwrittenBit(*bit))? {
                        state.apply_gate(GateKind::X, &[*qubit], &[])?;
                    }
                }
            }
        }
        Ok(transcript)
    }

    pub fn count_gates(&self) -> GateCountReport {
        let mut per_label = BTreeMap::new();
        let mut total = 0;
        for instr in self.instructions.iter().filter(|i| i.is_gate()) {
            *per_label.entry(instr.label.to_string()).or_insert(0) += 1;
            total += 1;
        }
        GateCountReport { per_label, total }
    }

    /// Line-oriented text dump, one instruction per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for instr in &self.instructions {
            out.push_str(&dump_line(instr));
            out.push('\n');
        }
        out
    }
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    let parts: Vec<String> = items.into_iter().map(|x| x.to_string()).collect();
    if parts.is_empty() {
        "-".into()
    } else {
        parts.join(",")
    }
}

fn dump_line(instr: &Instruction) -> String {
    let label = if instr.label.is_empty() { "-" } else { &instr.label };
    let (gate, targets, controls, mut classical) = match &instr.op {
        Operation::Gate {
            kind,
            targets,
            controls,
        } => (kind.name(), join(targets), join(controls), String::new()),
        Operation::Measure { qubit, bit } => ("MEASURE".into(), qubit.to_string(), "-".into(), format!("->c{bit}")),
        Operation::ResetToZero { qubit, bit } => ("RESET".into(), qubit.to_string(), "-".into(), format!("c{bit}")),
    };
    match &instr.condition {
        Condition::Always => {}
        Condition::Constant(bit) => {
            let _ = write!(classical, "const={}", u8::from(*bit));
        }
        Condition::Parity(bits) => {
            let expr: Vec<String> = bits.iter().map(|b| format!("c{b}")).collect();
            classical.push_str(&expr.join("^"));
        }
    }
    if classical.is_empty() {
        classical.push('-');
    }
    format!("{label} | {gate} | {targets} | {controls} | {classical}")
}

/// Gate totals keyed by full instruction label.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GateCountReport {
    pub per_label: BTreeMap<String, usize>,
    pub total: usize,
}

impl GateCountReport {
    /// Gates whose label equals `prefix` or lies below it in the hierarchy.
    pub fn under(&self, prefix: &str) -> usize {
        self.per_label
            .iter()
            .filter(|(label, _)| {
                label.as_str() == prefix || (label.starts_with(prefix) && label[prefix.len()..].starts_with('/'))
            })
            .map(|(_, n)| n)
            .sum()
    }

    /// Gates whose label path contains the segment `segment`.
    pub fn with_segment(&self, segment: &str) -> usize {
        self.per_label
            .iter()
            .filter(|(label, _)| label.split('/').any(|s| s == segment))
            .map(|(_, n)| n)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(i: usize) -> Qubit {
        Qubit(i)
    }

    #[test]
    fn reverse_swaps_order_and_inverts() {
        let mut c = Circuit::new(2, "t");
        c.h(q(0)).unwrap();
        c.cnot(q(0), q(1)).unwrap();
        c.gate(GateKind::R(3), &[q(1)], &[]).unwrap();
        let r = c.reverse().unwrap();
        let ops: Vec<_> = r.instructions().iter().map(|i| i.op.clone()).collect();
        assert_eq!(
            ops,
            vec![
                Instruction::gate(GateKind::RInv(3), &[q(1)], &[]).op,
                Instruction::gate(GateKind::X, &[q(1)], &[Control::pos(q(0))]).op,
                Instruction::gate(GateKind::H, &[q(0)], &[]).op,
            ]
        );
        assert_eq!(r.reverse().unwrap(), c);
    }

    #[test]
    fn reverse_rejects_measurement() {
        let mut c = Circuit::new(1, "t").with_classical_bits(1);
        c.measure(q(0), 0).unwrap();
        assert!(matches!(c.reverse(), Err(Error::NotReversible(_))));
    }

    #[test]
    fn add_controls_makes_cnot() {
        let mut c = Circuit::new(2, "t");
        c.x(q(1)).unwrap();
        let cc = c.add_controls(&[Control::pos(q(0))]).unwrap();
        let mut expected = Circuit::new(2, "t");
        expected.cnot(q(0), q(1)).unwrap();
        assert_eq!(cc, expected);
    }

    #[test]
    fn add_controls_errors() {
        let mut c = Circuit::new(7, "t");
        c.toffoli(q(0), q(1), q(2)).unwrap();
        assert_eq!(c.add_controls(&[Control::pos(q(1))]), Err(Error::ControlCollision(1)));
        let many: Vec<_> = (3..7).map(|i| Control::pos(q(i))).collect();
        assert_eq!(c.add_controls(&many), Err(Error::TooManyControls(6)));
    }

    #[test]
    fn measure_then_classical_x() {
        let mut c = Circuit::new(2, "t").with_classical_bits(1);
        c.measure(q(0), 0).unwrap();
        c.push(Instruction::gate(GateKind::X, &[q(1)], &[]).when(Condition::Parity(vec![0])))
            .unwrap();
        let mut s = QuantumState::from_basis(2, 0b01).unwrap();
        let mut rng = RandomSource::new(0);
        let transcript = c.execute(&mut s, &mut rng).unwrap();
        assert_eq!(transcript, vec![true]);
        assert_eq!(s.sorted_amplitudes()[0].0, 0b11);
    }

    #[test]
    fn parity_of_unwritten_bit_rejected() {
        let mut c = Circuit::new(1, "t").with_classical_bits(2);
        let err = c.push(Instruction::gate(GateKind::Z, &[q(0)], &[]).when(Condition::Parity(vec![1])));
        assert_eq!(err, Err(Error::UnwrittenBit(1)));
    }

    #[test]
    fn empty_circuit_is_identity() {
        let c = Circuit::new(3, "empty");
        let mut s = QuantumState::from_basis(3, 5).unwrap();
        let before = s.clone();
        let mut rng = RandomSource::new(0);
        assert!(c.execute(&mut s, &mut rng).unwrap().is_empty());
        assert_eq!(s.sorted_amplitudes(), before.sorted_amplitudes());
    }

    #[test]
    fn constant_false_counts_but_skips() {
        let mut c = Circuit::new(1, "t");
        c.push(
            Instruction::gate(GateKind::X, &[q(0)], &[])
                .when(Condition::Constant(false))
                .labelled("BHA"),
        )
        .unwrap();
        assert_eq!(c.count_gates().total, 1);
        let mut s = QuantumState::new(1).unwrap();
        c.execute(&mut s, &mut RandomSource::new(0)).unwrap();
        assert_eq!(s.sorted_amplitudes()[0].0, 0);
    }

    #[test]
    fn nested_counts() {
        let mut leaf = Circuit::new(2, "leaf");
        leaf.cnot(q(0), q(1)).unwrap();
        leaf = leaf.relabel("FA");
        let mut mid = Circuit::new(2, "mid");
        mid.append_nested("AN", &leaf).unwrap();
        mid.append_nested("AN", &leaf).unwrap();
        let mut top = Circuit::new(2, "top");
        top.append_nested("XAN", &mid).unwrap();
        top.x(q(0)).unwrap();
        let report = top.count_gates();
        assert_eq!(report.total, 3);
        assert_eq!(report.under("XAN"), 2);
        assert_eq!(report.under("XAN/AN"), 2);
        assert_eq!(report.under("XA"), 0);
        assert_eq!(report.with_segment("FA"), 2);
    }

    #[test]
    fn dump_format() {
        let mut c = Circuit::new(3, "t").with_classical_bits(2);
        c.push(Instruction::gate(GateKind::X, &[q(2)], &[Control::pos(q(0)), Control::neg(q(1))]).labelled("AN/FA"))
            .unwrap();
        c.measure(q(0), 0).unwrap();
        c.measure(q(1), 1).unwrap();
        c.push(Instruction::gate(GateKind::Z, &[q(2)], &[]).when(Condition::Parity(vec![0, 1])))
            .unwrap();
        c.push(Instruction::reset(q(0), 0)).unwrap();
        assert_eq!(
            c.dump(),
            "AN/FA | X | 2 | 0+,1- | -\n\
             - | MEASURE | 0 | - | ->c0\n\
             - | MEASURE | 1 | - | ->c1\n\
             - | Z | 2 | - | c0^c1\n\
             - | RESET | 0 | - | c0\n"
        );
    }
}
