//! Fixed workloads for the simulator benchmarks.

use distshor::revarith::{build_an, build_cm_m};
use distshor::shor::ModularExponentiation;
use distshor::{build_qft, plan_placement, Circuit, Direction, FourierSpec, PlacementPlan, RegisterLayout, Result};

/// Base and modulus of the standard workload.
pub const A: u64 = 7;
pub const N: u64 = 15;

/// One AN block and its seven-node plan at n = 4, m = 8.
pub fn adder_block() -> Result<(Circuit, PlacementPlan)> {
    let layout = RegisterLayout::new(4, 8)?;
    Ok((build_an(A, N, &layout)?, plan_placement(4, 8)?))
}

/// Controlled exponentiation over `m` counting qubits.
pub fn exponentiation(m: usize) -> Result<Circuit> {
    build_cm_m(A, N, m, &RegisterLayout::new(4, m)?)
}

pub fn fourier(m: usize) -> Result<Circuit> {
    build_qft(&FourierSpec::contiguous(m, Direction::Forward))
}

pub fn order_finding_source(m: usize) -> Result<ModularExponentiation> {
    ModularExponentiation::new(A, N, m)
}
