//! Reversible modular arithmetic: bit adders, ripple adders, the modular
//! adder and its garbage-free variants, modular multiplication and the
//! controlled modular exponentiation used by order finding.
//!
//! Classical constants never occupy qubits. A gate that depends on a constant
//! bit carries [`Condition::Constant`], so every builder has the same gate
//! count whatever the constant, while only the gates for set bits act.
//!
//! Every builder returns labels rooted at its own name (`"FA"`, `"AN/HA"`,
//! `"A/XAN+/AN/FA"`, ...), so [`GateCountReport::under`](crate::GateCountReport::under)
//! can check each level of the construction separately.

use serde::Serialize;

use crate::circuit::{Circuit, Condition, Instruction};
use crate::error::{Error, Result};
use crate::gate::{Control, GateKind, Qubit};
use crate::qstate::{BasisIndex, MAX_QUBITS};

/// Qubit registers of the modular-exponentiation circuit.
///
/// Order in the qubit pool: `k` (m), `x` (n), `b` (n), `s` (n), `carry` (1),
/// `iout` (n), `out` (n), for `5n + m + 1` qubits in total. The ripple adders
/// keep their internal carries in the sum register itself (bit `i + 1` holds
/// the carry into position `i + 1` until it is overwritten by the sum), so the
/// only separate carry qubit is the final overflow.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegisterLayout {
    pub n: usize,
    pub m: usize,
    pub k: Vec<Qubit>,
    pub x: Vec<Qubit>,
    pub b: Vec<Qubit>,
    pub s: Vec<Qubit>,
    pub carry: Qubit,
    /// Modular sum produced by the modular adder before it is copied out.
    pub iout: Vec<Qubit>,
    pub out: Vec<Qubit>,
}

impl RegisterLayout {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if n == 0 || n > 63 {
            return Err(Error::WidthMismatch(format!("register width n = {n}")));
        }
        let total = 5 * n + m + 1;
        if total > MAX_QUBITS {
            return Err(Error::TooManyQubits(total));
        }
        let mut next = 0;
        let mut take = |len: usize| -> Vec<Qubit> {
            let r = (next..next + len).map(Qubit).collect();
            next += len;
            r
        };
        let k = take(m);
        let x = take(n);
        let b = take(n);
        let s = take(n);
        let carry = take(1)[0];
        let iout = take(n);
        let out = take(n);
        Ok(RegisterLayout {
            n,
            m,
            k,
            x,
            b,
            s,
            carry,
            iout,
            out,
        })
    }

    pub fn num_qubits(&self) -> usize {
        5 * self.n + self.m + 1
    }

    /// Qubits that must return to `|0⟩` after every garbage-free block.
    pub fn ancillae(&self) -> Vec<Qubit> {
        let mut a = self.s.clone();
        a.push(self.carry);
        a.extend(&self.iout);
        a.extend(&self.out);
        a
    }

    /// Named roles, one per qubit, in pool order.
    pub fn roles(&self) -> Vec<(String, Qubit)> {
        let mut roles = Vec::with_capacity(self.num_qubits());
        let mut add = |name: &str, reg: &[Qubit]| {
            for (i, &q) in reg.iter().enumerate() {
                roles.push((format!("{name}[{i}]"), q));
            }
        };
        add("k", &self.k);
        add("x", &self.x);
        add("b", &self.b);
        add("s", &self.s);
        roles.push(("carry".to_string(), self.carry));
        let mut add = |name: &str, reg: &[Qubit]| {
            for (i, &q) in reg.iter().enumerate() {
                roles.push((format!("{name}[{i}]"), q));
            }
        };
        add("iout", &self.iout);
        add("out", &self.out);
        roles
    }
}

/// Basis index with `value` written little-endian into `register`.
pub fn encode_register(register: &[Qubit], value: u64) -> BasisIndex {
    register
        .iter()
        .enumerate()
        .filter(|(i, _)| (value >> i) & 1 == 1)
        .fold(0, |acc, (_, q)| acc | (1u128 << q.0))
}

/// Little-endian value of `register` in basis state `index`.
pub fn decode_register(index: BasisIndex, register: &[Qubit]) -> u64 {
    crate::qstate::extract_bits(index, register)
}

/// A classical integer fixed at circuit-construction time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassicalConstant {
    value: u64,
    width: usize,
}

impl ClassicalConstant {
    pub fn new(value: u64, width: usize) -> Result<Self> {
        if width < 64 && value >> width != 0 {
            return Err(Error::ConstantTooWide { value, width });
        }
        Ok(ClassicalConstant { value, width })
    }

    /// Two's-complement encoding of `value` (possibly negative) in `width` bits.
    pub fn wrapping(value: i64, width: usize) -> Self {
        let mask = if width >= 64 { u64::MAX } else { (1u64 << width) - 1 };
        ClassicalConstant {
            value: (value as u64) & mask,
            width,
        }
    }

    pub fn value(self) -> u64 {
        self.value
    }

    pub fn width(self) -> usize {
        self.width
    }

    pub fn bit(self, i: usize) -> bool {
        i < 64 && (self.value >> i) & 1 == 1
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn modmul(a: u64, b: u64, modulus: u64) -> u64 {
    ((a as u128 * b as u128) % modulus as u128) as u64
}

pub fn modpow(base: u64, mut exp: u64, modulus: u64) -> u64 {
    if modulus == 1 {
        return 0;
    }
    let mut result = 1;
    let mut base = base % modulus;
    while exp > 0 {
        if exp & 1 == 1 {
            result = modmul(result, base, modulus);
        }
        base = modmul(base, base, modulus);
        exp >>= 1;
    }
    result
}

/// Inverse of `a` modulo `modulus` by the extended Euclidean algorithm.
pub fn modinv(a: u64, modulus: u64) -> Result<u64> {
    let (mut old_r, mut r) = (a as i128 % modulus as i128, modulus as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return Err(Error::NotCoprime { a, modulus });
    }
    Ok(old_s.rem_euclid(modulus as i128) as u64)
}

/// Number of bits needed to write `value`.
pub fn bit_length(value: u64) -> usize {
    (64 - value.leading_zeros()) as usize
}

fn distinct(qubits: &[Qubit]) -> Result<()> {
    for (i, q) in qubits.iter().enumerate() {
        if qubits[..i].contains(q) {
            return Err(Error::DuplicateQubit(q.0));
        }
    }
    Ok(())
}

fn constant_gate(kind: GateKind, target: Qubit, controls: &[Control], bit: bool) -> Instruction {
    Instruction::gate(kind, &[target], controls).when(Condition::Constant(bit))
}

/// Bit full adder with classical addend bit `a`:
/// `|c⟩|b⟩|0⟩ → |a⊕b⊕c⟩|b⟩|maj(a,b,c)⟩`, four gates.
fn push_bfa(
    circuit: &mut Circuit,
    label: &str,
    a: bool,
    c: Qubit,
    b: Qubit,
    c_out: Qubit,
    flag: Option<Qubit>,
) -> Result<()> {
    let flag: Vec<Control> = flag.into_iter().map(Control::pos).collect();
    let with_flag = |mut ctrl: Vec<Control>| {
        ctrl.extend_from_slice(&flag);
        ctrl
    };
    let steps = [
        constant_gate(GateKind::X, c_out, &with_flag(vec![Control::pos(c)]), a),
        constant_gate(GateKind::X, c, &with_flag(vec![]), a),
        Instruction::gate(GateKind::X, &[c_out], &[Control::pos(c), Control::pos(b)]),
        Instruction::gate(GateKind::X, &[c], &[Control::pos(b)]),
    ];
    for instr in steps {
        circuit.push(instr.labelled(label).anchored(b))?;
    }
    Ok(())
}

/// Bit half adder: `|c⟩|b⟩ → |a⊕b⊕c⟩|b⟩`, two gates.
fn push_bha(circuit: &mut Circuit, label: &str, a: bool, c: Qubit, b: Qubit, flag: Option<Qubit>) -> Result<()> {
    let flag: Vec<Control> = flag.into_iter().map(Control::pos).collect();
    circuit.push(constant_gate(GateKind::X, c, &flag, a).labelled(label).anchored(b))?;
    circuit.push(
        Instruction::gate(GateKind::X, &[c], &[Control::pos(b)])
            .labelled(label)
            .anchored(b),
    )
}

pub fn build_bfa(a: bool, c: Qubit, b: Qubit, c_out: Qubit, num_qubits: usize) -> Result<Circuit> {
    distinct(&[c, b, c_out])?;
    let mut circuit = Circuit::new(num_qubits, "BFA");
    push_bfa(&mut circuit, "BFA", a, c, b, c_out, None)?;
    Ok(circuit)
}

pub fn build_bha(a: bool, c: Qubit, b: Qubit, num_qubits: usize) -> Result<Circuit> {
    distinct(&[c, b])?;
    let mut circuit = Circuit::new(num_qubits, "BHA");
    push_bha(&mut circuit, "BHA", a, c, b, None)?;
    Ok(circuit)
}

/// Ripple adder of a constant into `sum`: `sum ← addend + a + sum[0]`.
///
/// `sum[0]` carries the input carry; `sum[1..]` must start at `|0⟩`. With
/// `carry_out` the last bit is a full adder writing the overflow there,
/// otherwise it is a half adder and the sum wraps mod `2^n`. When `flag` is
/// given, only the constant-dependent gates are controlled by it, so the
/// circuit adds `flag · a`.
fn push_ripple(
    circuit: &mut Circuit,
    label: &str,
    a: ClassicalConstant,
    addend: &[Qubit],
    sum: &[Qubit],
    carry_out: Option<Qubit>,
    flag: Option<Qubit>,
) -> Result<()> {
    let n = addend.len();
    if sum.len() != n || a.width() != n || n == 0 {
        return Err(Error::WidthMismatch(format!(
            "addend {n} bits, sum {} bits, constant {} bits",
            sum.len(),
            a.width()
        )));
    }
    let mut all: Vec<Qubit> = addend.iter().chain(sum).copied().collect();
    all.extend(carry_out);
    all.extend(flag);
    distinct(&all)?;
    for i in 0..n {
        let next = if i + 1 < n { Some(sum[i + 1]) } else { carry_out };
        match next {
            Some(c_out) => push_bfa(circuit, label, a.bit(i), sum[i], addend[i], c_out, flag)?,
            None => push_bha(circuit, label, a.bit(i), sum[i], addend[i], flag)?,
        }
    }
    Ok(())
}

fn check_layout(layout: &RegisterLayout, a: ClassicalConstant) -> Result<()> {
    if a.width() != layout.n {
        return Err(Error::WidthMismatch(format!(
            "constant has {} bits, registers have {}",
            a.width(),
            layout.n
        )));
    }
    Ok(())
}

/// `FA_a: |b⟩|c,0…⟩_s|0⟩_carry → |b⟩|a+b+c mod 2^n⟩_s|overflow⟩_carry`, `4n` gates.
pub fn build_fa(a: ClassicalConstant, layout: &RegisterLayout) -> Result<Circuit> {
    check_layout(layout, a)?;
    let mut circuit = Circuit::new(layout.num_qubits(), "FA");
    push_ripple(&mut circuit, "FA", a, &layout.b, &layout.s, Some(layout.carry), None)?;
    Ok(circuit)
}

/// `HA_a: |b⟩|c,0…⟩_s → |b⟩|a+b+c mod 2^n⟩_s`, `4n − 2` gates.
pub fn build_ha(a: ClassicalConstant, layout: &RegisterLayout) -> Result<Circuit> {
    check_layout(layout, a)?;
    let mut circuit = Circuit::new(layout.num_qubits(), "HA");
    push_ripple(&mut circuit, "HA", a, &layout.b, &layout.s, None, None)?;
    Ok(circuit)
}

fn check_modulus(a: u64, modulus: u64, n: usize) -> Result<()> {
    if modulus < 2 || (n < 64 && modulus > 1u64 << n) {
        return Err(Error::Precondition(format!(
            "modulus {modulus} must satisfy 2 <= N <= 2^{n}"
        )));
    }
    if a >= modulus {
        return Err(Error::Precondition(format!(
            "addend {a} must be below the modulus {modulus}"
        )));
    }
    Ok(())
}

fn an_body(a: u64, modulus: u64, layout: &RegisterLayout) -> Result<Circuit> {
    let n = layout.n;
    check_modulus(a, modulus, n)?;
    let two_n = 1u128 << n;
    let shifted = (a as u128 + two_n - modulus as u128) as u64;
    let mut circuit = Circuit::new(layout.num_qubits(), "AN");
    push_ripple(
        &mut circuit,
        "FA",
        ClassicalConstant::new(shifted, n)?,
        &layout.b,
        &layout.s,
        Some(layout.carry),
        None,
    )?;
    // Flip the overflow so it flags the branch that must add N back.
    circuit.push(
        Instruction::gate(GateKind::X, &[layout.carry], &[])
            .labelled("NOT")
            .anchored(layout.carry)
            .fused(),
    )?;
    push_ripple(
        &mut circuit,
        "HA",
        ClassicalConstant::wrapping(modulus as i64, n),
        &layout.s,
        &layout.iout,
        None,
        Some(layout.carry),
    )?;
    Ok(circuit)
}

fn nest(root: &str, body: &Circuit) -> Result<Circuit> {
    let mut c = Circuit::new(body.num_qubits(), root);
    c.append_nested(root, body)?;
    Ok(c)
}

/// `AN_a: |b⟩|0⟩|0⟩|0⟩ → |b⟩|s⟩|c⟩|a+b mod N⟩_iout`, `8n − 1` gates.
pub fn build_an(a: u64, modulus: u64, layout: &RegisterLayout) -> Result<Circuit> {
    nest("AN", &an_body(a, modulus, layout)?)
}

fn copy_body(from: &[Qubit], to: &[Qubit], num_qubits: usize) -> Result<Circuit> {
    let mut c = Circuit::new(num_qubits, "COPY");
    for (&f, &t) in from.iter().zip(to) {
        c.push(
            Instruction::gate(GateKind::X, &[t], &[Control::pos(f)])
                .labelled("")
                .anchored(t),
        )?;
    }
    Ok(c)
}

fn swap_body(x: &[Qubit], y: &[Qubit], num_qubits: usize) -> Result<Circuit> {
    let mut c = Circuit::new(num_qubits, "SWAP");
    for (&p, &q) in x.iter().zip(y) {
        c.push(Instruction::gate(GateKind::Swap, &[p, q], &[]).anchored(q))?;
    }
    Ok(c)
}

fn xan_body(a: u64, modulus: u64, layout: &RegisterLayout) -> Result<Circuit> {
    let an = an_body(a, modulus, layout)?;
    let mut c = Circuit::new(layout.num_qubits(), "XAN");
    c.append_nested("AN", &an)?;
    c.append_nested("COPY", &copy_body(&layout.iout, &layout.out, layout.num_qubits())?)?;
    c.append_nested("AN^r", &an.reverse()?)?;
    Ok(c)
}

/// `XAN_a: |b⟩|0⟩ → |b⟩|a+b mod N⟩_out` with every other ancilla restored.
pub fn build_xan(a: u64, modulus: u64, layout: &RegisterLayout) -> Result<Circuit> {
    nest("XAN", &xan_body(a, modulus, layout)?)
}

fn adder_body(a: u64, modulus: u64, layout: &RegisterLayout) -> Result<Circuit> {
    check_modulus(a, modulus, layout.n)?;
    let minus_a = (modulus - a) % modulus;
    let mut c = Circuit::new(layout.num_qubits(), "A");
    c.append_nested("XAN+", &xan_body(a, modulus, layout)?)?;
    // `b` takes the sum (anchored on the b side), `out` keeps the old b.
    let mut swap = Circuit::new(layout.num_qubits(), "SWAP");
    for (&p, &q) in layout.b.iter().zip(&layout.out) {
        swap.push(Instruction::gate(GateKind::Swap, &[p, q], &[]).anchored(p))?;
    }
    c.append_nested("SWAP", &swap)?;
    c.append_nested("XAN-^r", &xan_body(minus_a, modulus, layout)?.reverse()?)?;
    Ok(c)
}

/// `A_a: |b⟩ → |a+b mod N⟩` in place, `35n − 4` gates.
pub fn build_adder(a: u64, modulus: u64, layout: &RegisterLayout) -> Result<Circuit> {
    nest("A", &adder_body(a, modulus, layout)?)
}

fn check_coprime(a: u64, modulus: u64) -> Result<()> {
    if gcd(a, modulus) != 1 {
        return Err(Error::NotCoprime { a, modulus });
    }
    Ok(())
}

fn mf_body(a: u64, modulus: u64, layout: &RegisterLayout) -> Result<Circuit> {
    check_coprime(a, modulus)?;
    let mut c = Circuit::new(layout.num_qubits(), "MF");
    let mut term = a % modulus;
    for (j, &xj) in layout.x.iter().enumerate() {
        let block = adder_body(term, modulus, layout)?.add_controls(&[Control::pos(xj)])?;
        c.append_nested(&format!("A[{j}]"), &block)?;
        term = modmul(term, 2, modulus);
    }
    Ok(c)
}

/// `MF_a: |x⟩|0⟩_b → |x⟩|ax mod N⟩_b`, one controlled adder per bit of `x`.
pub fn build_mf(a: u64, modulus: u64, layout: &RegisterLayout) -> Result<Circuit> {
    nest("MF", &mf_body(a, modulus, layout)?)
}

fn m_body(a: u64, modulus: u64, layout: &RegisterLayout) -> Result<Circuit> {
    check_coprime(a, modulus)?;
    let inv = modinv(a, modulus)?;
    let mut c = Circuit::new(layout.num_qubits(), "M");
    c.append_nested("MF", &mf_body(a, modulus, layout)?)?;
    c.append_nested("SWAP", &swap_body(&layout.x, &layout.b, layout.num_qubits())?)?;
    c.append_nested("MF'^r", &mf_body(inv, modulus, layout)?.reverse()?)?;
    Ok(c)
}

/// `M_a: |x⟩ → |ax mod N⟩` in place on `x`; uncomputes with the inverse multiplier.
pub fn build_m(a: u64, modulus: u64, layout: &RegisterLayout) -> Result<Circuit> {
    nest("M", &m_body(a, modulus, layout)?)
}

/// `c_m(M_a): |k⟩|x⟩ → |k⟩|a^k x mod N⟩` by repeated squaring.
pub fn build_cm_m(a: u64, modulus: u64, m: usize, layout: &RegisterLayout) -> Result<Circuit> {
    if m == 0 || m > layout.m {
        return Err(Error::WidthMismatch(format!(
            "{m} exponent bits requested, layout has {}",
            layout.m
        )));
    }
    check_coprime(a, modulus)?;
    let mut body = Circuit::new(layout.num_qubits(), "c_m(M_a)");
    let mut power = a % modulus;
    for (i, &ki) in layout.k.iter().take(m).enumerate() {
        let block = m_body(power, modulus, layout)?.add_controls(&[Control::pos(ki)])?;
        body.append_nested(&format!("M[{i}]"), &block)?;
        power = modmul(power, power, modulus);
    }
    nest("c_m(M_a)", &body)
}

/// Levels of the gate-count recursion.
pub const GATE_COUNT_LEVELS: [&str; 11] = [
    "BFA", "BHA", "FA", "HA", "AN", "COPY", "SWAP", "XAN", "A", "M", "c_m(M_a)",
];

/// Gate-count recursion evaluated literally:
/// `G(M) = n·G(A)` and `G(c_m) = m·G(M)`.
pub fn gate_count_formula(level: &str, n: u64, m: u64) -> Result<u64> {
    let fa = 4 * n;
    let ha = 4 * n - 2;
    let an = fa + ha + 1;
    let xan = 2 * an + n;
    let a = 2 * xan + n;
    Ok(match level {
        "BFA" => 4,
        "BHA" => 2,
        "FA" => fa,
        "HA" => ha,
        "AN" => an,
        "COPY" | "SWAP" => n,
        "XAN" => xan,
        "A" => a,
        "MF" | "M" => n * a,
        "c_m(M_a)" => m * n * a,
        "QFT^-1" => m * (m + 1) / 2,
        other => return Err(Error::UnknownLevel(other.to_string())),
    })
}

/// Closed form `70mn² − 6mn` for the whole exponentiation.
pub fn closed_form_cm(n: u64, m: u64) -> u64 {
    70 * m * n * n - 6 * m * n
}

/// Exact gate count of what the builders here construct. It differs from
/// [`gate_count_formula`] from `M` upward because `M` contains two `MF`
/// passes plus an `n`-gate swap.
pub fn construction_gate_count(level: &str, n: u64, m: u64) -> Result<u64> {
    let a = gate_count_formula("A", n, m)?;
    Ok(match level {
        "MF" => n * a,
        "M" => 2 * n * a + n,
        "c_m(M_a)" => m * (2 * n * a + n),
        other => gate_count_formula(other, n, m)?,
    })
}
