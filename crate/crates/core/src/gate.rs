//! Gate vocabulary shared by the state kernel and the circuit IR.
//!
//! Controlled gates are not separate kinds: a CNOT is an [`GateKind::X`] with
//! one positive control, a Toffoli has two, and a multi-controlled X carries
//! any mix of positive and negative controls.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Index of a qubit in a global pool (bit position in a basis index).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Qubit(pub usize);

impl Qubit {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for Qubit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateKind {
    X,
    Z,
    H,
    /// `diag(1, e^{2πi/2^k})`, `k ≥ 2`.
    R(u32),
    /// Inverse of [`GateKind::R`].
    RInv(u32),
    /// `diag(1, e^{2πi·turns})`; used for test unitaries with arbitrary eigenphases.
    Phase(f64),
    Swap,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::Swap => 2,
            _ => 1,
        }
    }

    pub fn inverse(self) -> GateKind {
        match self {
            GateKind::R(k) => GateKind::RInv(k),
            GateKind::RInv(k) => GateKind::R(k),
            GateKind::Phase(t) => GateKind::Phase(-t),
            other => other,
        }
    }

    pub fn validate(self) -> Result<()> {
        match self {
            GateKind::R(k) | GateKind::RInv(k) if k < 2 => {
                Err(Error::InvalidGate(format!("R_k needs k >= 2, got k = {k}")))
            }
            GateKind::Phase(t) if !t.is_finite() => Err(Error::InvalidGate(format!("non-finite phase {t}"))),
            _ => Ok(()),
        }
    }

    /// Phase applied to the `|1⟩` component of a diagonal gate.
    pub fn diagonal_phase(self) -> Option<Complex64> {
        let turns = match self {
            // exact, so Z·Z restores amplitudes bit for bit
            GateKind::Z => return Some(Complex64::new(-1.0, 0.0)),
            GateKind::R(k) => 2f64.powi(-(k as i32)),
            GateKind::RInv(k) => -(2f64.powi(-(k as i32))),
            GateKind::Phase(t) => t,
            _ => return None,
        };
        Some(Complex64::from_polar(1.0, 2.0 * PI * turns))
    }

    pub fn name(self) -> String {
        match self {
            GateKind::X => "X".into(),
            GateKind::Z => "Z".into(),
            GateKind::H => "H".into(),
            GateKind::R(k) => format!("R{k}"),
            GateKind::RInv(k) => format!("R{k}^-1"),
            GateKind::Phase(t) => format!("PHASE({t})"),
            GateKind::Swap => "SWAP".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    /// Fires when the control qubit is `|1⟩`.
    Positive,
    /// Fires when the control qubit is `|0⟩`.
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Control {
    pub qubit: Qubit,
    pub polarity: Polarity,
}

impl Control {
    pub fn pos(qubit: Qubit) -> Self {
        Control {
            qubit,
            polarity: Polarity::Positive,
        }
    }

    pub fn neg(qubit: Qubit) -> Self {
        Control {
            qubit,
            polarity: Polarity::Negative,
        }
    }
}

impl fmt::Display for Control {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.polarity {
            Polarity::Positive => '+',
            Polarity::Negative => '-',
        };
        write!(f, "{}{}", self.qubit, sign)
    }
}
