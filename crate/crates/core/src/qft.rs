//! Quantum Fourier transform over an arbitrary list of qubits.
//!
//! Qubit `qubits[0]` is the least significant bit. The forward transform maps
//! `|j⟩ → 2^{-n/2} Σ_k e^{2πi jk/2^n} |k⟩`; it is built from Hadamards and
//! controlled `R_k` rotations followed by an explicit bit-reversal network of
//! SWAPs. Every gate has its own label, so a distributed run books each
//! crossing rotation as a separate non-local block.

use crate::circuit::{Circuit, Instruction};
use crate::error::{Error, Result};
use crate::gate::{Control, GateKind, Qubit};
use crate::netsim::ResourceLedger;
use crate::partition::{DistributedEngine, NlTReport, PlacementPlan};
use crate::qstate::{BasisIndex, QuantumState, RandomSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FourierSpec {
    pub qubits: Vec<Qubit>,
    /// Size of the qubit pool the circuit lives in.
    pub pool: usize,
    pub direction: Direction,
    pub include_swaps: bool,
}

impl FourierSpec {
    /// Transform over `qubits[..]` in a pool of exactly that many qubits.
    pub fn contiguous(num_qubits: usize, direction: Direction) -> Self {
        FourierSpec {
            qubits: (0..num_qubits).map(Qubit).collect(),
            pool: num_qubits,
            direction,
            include_swaps: true,
        }
    }

    pub fn on(qubits: &[Qubit], pool: usize, direction: Direction) -> Self {
        FourierSpec {
            qubits: qubits.to_vec(),
            pool,
            direction,
            include_swaps: true,
        }
    }
}

fn forward_body(spec: &FourierSpec) -> Result<Circuit> {
    let q = &spec.qubits;
    let n = q.len();
    if n == 0 {
        return Err(Error::WidthMismatch(
            "a Fourier transform needs at least one qubit".into(),
        ));
    }
    let mut c = Circuit::new(spec.pool, "QFT");
    for i in (0..n).rev() {
        c.push(Instruction::gate(GateKind::H, &[q[i]], &[]).labelled(&format!("H[{i}]")))?;
        for j in (0..i).rev() {
            let k = (i - j + 1) as u32;
            c.push(Instruction::gate(GateKind::R(k), &[q[i]], &[Control::pos(q[j])]).labelled(&format!("R[{j},{i}]")))?;
        }
    }
    if spec.include_swaps {
        for i in 0..n / 2 {
            c.push(Instruction::gate(GateKind::Swap, &[q[i], q[n - 1 - i]], &[]).labelled(&format!("SWAP[{i}]")))?;
        }
    }
    Ok(c)
}

pub fn build_qft(spec: &FourierSpec) -> Result<Circuit> {
    let body = match spec.direction {
        Direction::Forward => forward_body(spec)?,
        Direction::Inverse => forward_body(spec)?.reverse()?,
    };
    let root = match spec.direction {
        Direction::Forward => "QFT",
        Direction::Inverse => "QFT^-1",
    };
    let mut c = Circuit::new(spec.pool, root);
    c.append_nested(root, &body)?;
    Ok(c)
}

pub fn build_inverse_qft(spec: &FourierSpec) -> Result<Circuit> {
    build_qft(&FourierSpec {
        direction: Direction::Inverse,
        ..spec.clone()
    })
}

/// Result of running a transform on a partitioned network.
#[derive(Debug, Clone)]
pub struct DistributedRun {
    /// Output state over the logical qubits.
    pub state: QuantumState,
    pub ledger: ResourceLedger,
    pub report: NlTReport,
}

/// Runs the transform described by `spec` on the nodes of `plan`, starting
/// from the logical basis state `input`.
pub fn build_distributed_qft(
    spec: &FourierSpec,
    plan: &PlacementPlan,
    input: BasisIndex,
    rng: RandomSource,
) -> Result<DistributedRun> {
    for q in &spec.qubits {
        plan.home(*q)?;
    }
    let circuit = build_qft(spec)?;
    let mut engine = DistributedEngine::new(plan.clone(), rng)?;
    engine.load_basis(input)?;
    engine.execute(&circuit)?;
    Ok(DistributedRun {
        state: engine.logical_state()?,
        ledger: engine.ledger().clone(),
        report: engine.report().clone(),
    })
}
