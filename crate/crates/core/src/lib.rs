//! Sparse state-vector simulation of Shor's algorithm, monolithic or split
//! across a network of small quantum nodes.
//!
//! The pipeline is `revarith` (reversible modular arithmetic) → `qft` →
//! `shor` (phase estimation and order finding), with `partition` running any
//! circuit over the nodes simulated by `netsim`.

pub mod circuit;
pub mod error;
pub mod gate;
pub mod netsim;
pub mod partition;
pub mod qft;
pub mod qstate;
pub mod revarith;
pub mod shor;

pub use circuit::{Circuit, ClassicalBit, Condition, GateCountReport, Instruction, Operation};
pub use error::{Error, Result};
pub use gate::{Control, GateKind, Polarity, Qubit};
pub use netsim::{Network, NodeId, NodeSpec, ResourceLedger, Topology};
pub use partition::{plan_placement, DistributedEngine, NlTEntry, NlTReport, PlacementPlan};
pub use qft::{build_distributed_qft, build_inverse_qft, build_qft, Direction, FourierSpec};
pub use qstate::{BasisIndex, Distribution, QuantumState, RandomSource};
pub use revarith::{ClassicalConstant, RegisterLayout};
pub use shor::{factor, find_order, phase_estimate, FactorConfig, FactoringOutcome, Mode, OrderResult, PhaseEstimate};
