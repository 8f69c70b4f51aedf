//! Helpers shared by the integration tests.
#![allow(dead_code)]

use distshor::{BasisIndex, Circuit, Condition, GateKind, Operation, Polarity, QuantumState, Qubit, RandomSource};

/// Evaluates a circuit of X/SWAP gates (any controls) on a classical bit
/// string, without touching the state-vector simulator.
pub fn classical_eval(circuit: &Circuit, mut bits: BasisIndex) -> BasisIndex {
    for instr in circuit.instructions() {
        let fires = match &instr.condition {
            Condition::Always => true,
            Condition::Constant(b) => *b,
            Condition::Parity(_) => panic!("classical evaluator has no measurement record"),
        };
        let Operation::Gate {
            kind,
            targets,
            controls,
        } = &instr.op
        else {
            panic!("classical evaluator only runs gates");
        };
        if !fires {
            continue;
        }
        let on = controls.iter().all(|c| {
            let v = (bits >> c.qubit.0) & 1 == 1;
            match c.polarity {
                Polarity::Positive => v,
                Polarity::Negative => !v,
            }
        });
        if !on {
            continue;
        }
        match kind {
            GateKind::X => bits ^= 1 << targets[0].0,
            GateKind::Swap => {
                let (p, q) = (targets[0].0, targets[1].0);
                if (bits >> p) & 1 != (bits >> q) & 1 {
                    bits ^= (1 << p) | (1 << q);
                }
            }
            other => panic!("{other:?} is not a permutation gate"),
        }
    }
    bits
}

pub fn value_of(bits: BasisIndex, register: &[Qubit]) -> u64 {
    register
        .iter()
        .enumerate()
        .map(|(i, q)| (((bits >> q.0) & 1) as u64) << i)
        .sum()
}

pub fn encode(register: &[Qubit], value: u64) -> BasisIndex {
    register
        .iter()
        .enumerate()
        .map(|(i, q)| (((value >> i) & 1) as BasisIndex) << q.0)
        .fold(0, |a, b| a | b)
}

/// Runs `circuit` on a basis input and returns the single output basis
/// state, asserting it carries all the probability.
pub fn run_basis(circuit: &Circuit, input: BasisIndex) -> (BasisIndex, QuantumState) {
    let mut s = QuantumState::from_basis(circuit.num_qubits(), input).unwrap();
    circuit.execute(&mut s, &mut RandomSource::new(0)).unwrap();
    assert_eq!(s.support(), 1, "permutation circuit produced a superposition");
    let (idx, amp) = s.sorted_amplitudes()[0];
    assert!((amp.norm() - 1.0).abs() < 1e-12);
    (idx, s)
}

/// Asserts that each listed qubit has zero probability of reading 1.
pub fn assert_zero(state: &QuantumState, qubits: &[Qubit], context: &str) {
    for &q in qubits {
        let p = state.probability_one(q).unwrap();
        assert!(p < 1e-12, "{context}: qubit {q} has P(1) = {p}");
    }
}

pub fn modpow_oracle(base: u64, exp: u64, modulus: u64) -> u64 {
    (0..exp).fold(1 % modulus, |acc, _| acc * base % modulus)
}

pub fn gcd_oracle(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd_oracle(b, a % b)
    }
}

/// Bases in `2..N` coprime to `N`.
pub fn units(modulus: u64) -> Vec<u64> {
    (2..modulus).filter(|&a| gcd_oracle(a, modulus) == 1).collect()
}
