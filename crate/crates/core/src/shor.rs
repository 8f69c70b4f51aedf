//! Phase estimation, order finding and the classical factoring loop.

use serde::Serialize;

use crate::circuit::{Circuit, Instruction};
use crate::error::{Error, Result};
use crate::gate::{Control, GateKind, Qubit};
use crate::netsim::ResourceLedger;
use crate::partition::{plan_placement, DistributedEngine, NlTReport, PlacementPlan};
use crate::qft::{build_inverse_qft, FourierSpec};
use crate::qstate::{BasisIndex, Distribution, QuantumState, RandomSource};
use crate::revarith::{bit_length, build_cm_m, encode_register, gcd, modpow, RegisterLayout};

/// Where the circuit runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Monolithic,
    /// On the given placement; `None` uses [`plan_placement`] for the layout.
    Distributed(Option<PlacementPlan>),
}

impl Mode {
    pub fn distributed() -> Self {
        Mode::Distributed(None)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mode::Monolithic => "monolithic",
            Mode::Distributed(_) => "distributed",
        }
    }
}

/// A controlled-power circuit `c_m(U)` together with the registers it uses.
pub trait ControlledPower {
    /// Qubits of the circuit's pool.
    fn num_qubits(&self) -> usize;
    /// Counting register, least significant bit first.
    fn counting(&self) -> &[Qubit];
    /// `c_m(U)`: applies `U^k` to the work register for counting value `k`.
    fn circuit(&self) -> Result<Circuit>;
    /// Basis state of the work register (an eigenstate or a superposition of them).
    fn eigen_input(&self) -> BasisIndex;
    /// Placement used in distributed mode when none is given.
    fn default_plan(&self) -> Result<PlacementPlan>;
}

/// `U = diag(1, e^{2πiθ})` on one target qubit prepared in `|1⟩`.
#[derive(Debug, Clone)]
pub struct PhaseOracle {
    turns: f64,
    counting: Vec<Qubit>,
    target: Qubit,
}

impl PhaseOracle {
    pub fn new(turns: f64, m: usize) -> Result<Self> {
        if m == 0 || m > 63 {
            return Err(Error::WidthMismatch(format!("{m} counting qubits")));
        }
        if !turns.is_finite() {
            return Err(Error::InvalidGate(format!("non-finite phase {turns}")));
        }
        Ok(PhaseOracle {
            turns,
            counting: (0..m).map(Qubit).collect(),
            target: Qubit(m),
        })
    }
}

impl ControlledPower for PhaseOracle {
    fn num_qubits(&self) -> usize {
        self.counting.len() + 1
    }

    fn counting(&self) -> &[Qubit] {
        &self.counting
    }

    fn circuit(&self) -> Result<Circuit> {
        let mut c = Circuit::new(self.num_qubits(), "c_m(U)");
        for (i, &k) in self.counting.iter().enumerate() {
            let power = (self.turns * (1u64 << i) as f64).rem_euclid(1.0);
            c.push(
                Instruction::gate(GateKind::Phase(power), &[self.target], &[Control::pos(k)])
                    .labelled(&format!("c_m(U)/U[{i}]")),
            )?;
        }
        Ok(c)
    }

    fn eigen_input(&self) -> BasisIndex {
        1u128 << self.target.0
    }

    fn default_plan(&self) -> Result<PlacementPlan> {
        PlacementPlan::from_groups(
            &[self.counting.clone(), vec![self.target]],
            1,
            crate::netsim::DEFAULT_CHANNEL_QUBITS,
        )
    }
}

/// Modular exponentiation `|k⟩|x⟩ → |k⟩|a^k x mod N⟩` with `x` prepared in `|1⟩`.
#[derive(Debug, Clone)]
pub struct ModularExponentiation {
    pub a: u64,
    pub modulus: u64,
    pub layout: RegisterLayout,
}

impl ModularExponentiation {
    pub fn new(a: u64, modulus: u64, m: usize) -> Result<Self> {
        let n = bit_length(modulus);
        Ok(ModularExponentiation {
            a,
            modulus,
            layout: RegisterLayout::new(n, m)?,
        })
    }
}

impl ControlledPower for ModularExponentiation {
    fn num_qubits(&self) -> usize {
        self.layout.num_qubits()
    }

    fn counting(&self) -> &[Qubit] {
        &self.layout.k
    }

    fn circuit(&self) -> Result<Circuit> {
        build_cm_m(self.a, self.modulus, self.layout.m, &self.layout)
    }

    fn eigen_input(&self) -> BasisIndex {
        encode_register(&self.layout.x, 1)
    }

    fn default_plan(&self) -> Result<PlacementPlan> {
        plan_placement(self.layout.n, self.layout.m)
    }
}

/// Communication costs of one distributed phase-estimation round.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RoundResources {
    pub ledger: ResourceLedger,
    pub report: NlTReport,
    pub peak_live: Vec<usize>,
    pub capacity_respected: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseEstimate {
    pub j: u64,
    pub m: usize,
    pub theta_hat: f64,
    /// Exact distribution of the counting register just before measurement.
    #[serde(skip)]
    pub distribution: Distribution,
    /// Largest sparse support seen during `c_m(U)`.
    pub peak_support: usize,
    pub resources: Option<RoundResources>,
}

/// Reusable pieces of one phase-estimation experiment.
pub struct PhaseEstimation<'a> {
    source: &'a dyn ControlledPower,
    prep: Circuit,
    power: Circuit,
    inverse_qft: Circuit,
}

impl<'a> PhaseEstimation<'a> {
    pub fn new(source: &'a dyn ControlledPower) -> Result<Self> {
        let pool = source.num_qubits();
        let k = source.counting();
        if k.is_empty() {
            return Err(Error::WidthMismatch("empty counting register".into()));
        }
        let mut prep = Circuit::new(pool, "H^m");
        for (i, &q) in k.iter().enumerate() {
            prep.push(Instruction::gate(GateKind::H, &[q], &[]).labelled(&format!("H^m/H[{i}]")))?;
        }
        Ok(PhaseEstimation {
            source,
            prep,
            power: source.circuit()?,
            inverse_qft: build_inverse_qft(&FourierSpec::on(k, pool, crate::qft::Direction::Forward))?,
        })
    }

    /// Gates of the whole experiment, in execution order.
    pub fn full_circuit(&self) -> Result<Circuit> {
        let mut c = Circuit::new(self.source.num_qubits(), "phase-estimation");
        c.append(&self.prep)?;
        c.append(&self.power)?;
        c.append(&self.inverse_qft)?;
        Ok(c)
    }

    pub fn power_circuit(&self) -> &Circuit {
        &self.power
    }

    fn support_bound(&self) -> usize {
        4usize.saturating_mul(1usize << self.source.counting().len().min(60))
    }

    /// One round: prepare, apply `H^⊗m`, `c_m(U)`, `QFT^{-1}`, then measure
    /// the counting register bit by bit with `rng`. Protocol measurements of a
    /// distributed run draw from `protocol_rng`, so `rng` sees the same
    /// sequence in both modes.
    pub fn run(&self, mode: &Mode, rng: &mut RandomSource, protocol_rng: RandomSource) -> Result<PhaseEstimate> {
        let k = self.source.counting().to_vec();
        let m = k.len();
        let bound = self.support_bound();
        let (j, distribution, peak_support, resources) = match mode {
            Mode::Monolithic => {
                let mut state = QuantumState::from_basis(self.source.num_qubits(), self.source.eigen_input())?;
                let mut unused = protocol_rng;
                self.prep.execute(&mut state, &mut unused)?;
                state.reset_peak_support();
                self.power.execute(&mut state, &mut unused)?;
                let peak = state.peak_support();
                if peak > bound {
                    return Err(Error::SupportExceeded { support: peak, bound });
                }
                self.inverse_qft.execute(&mut state, &mut unused)?;
                let distribution = state.exact_distribution(&k)?;
                let mut j = 0u64;
                for (i, &q) in k.iter().enumerate() {
                    if state.measure(q, rng)? {
                        j |= 1 << i;
                    }
                }
                (j, distribution, peak, None)
            }
            Mode::Distributed(plan) => {
                let plan = match plan {
                    Some(p) => p.clone(),
                    None => self.source.default_plan()?,
                };
                let mut engine = DistributedEngine::new(plan, protocol_rng)?;
                engine.load_basis(self.source.eigen_input())?;
                engine.execute(&self.prep)?;
                engine.reset_peak_support();
                engine.execute(&self.power)?;
                let peak = engine.peak_support();
                if peak > bound {
                    return Err(Error::SupportExceeded { support: peak, bound });
                }
                engine.execute(&self.inverse_qft)?;
                let distribution = engine.logical_state()?.exact_distribution(&k)?;
                let mut j = 0u64;
                for (i, &q) in k.iter().enumerate() {
                    if engine.measure_with(q, rng)? {
                        j |= 1 << i;
                    }
                }
                let resources = RoundResources {
                    ledger: engine.ledger().clone(),
                    report: engine.report().clone(),
                    peak_live: engine.peak_live(),
                    capacity_respected: engine.capacity_respected(),
                };
                (j, distribution, peak, Some(resources))
            }
        };
        Ok(PhaseEstimate {
            j,
            m,
            theta_hat: j as f64 / (1u128 << m) as f64,
            distribution,
            peak_support,
            resources,
        })
    }
}

/// One phase-estimation round with a freshly built circuit.
pub fn phase_estimate(source: &dyn ControlledPower, mode: &Mode, rng: &mut RandomSource) -> Result<PhaseEstimate> {
    let protocol = rng.fork(1);
    PhaseEstimation::new(source)?.run(mode, rng, protocol)
}

/// Denominators of the convergents of `j / two_to_m` that are below `modulus`,
/// ascending and without repeats. `j = 0` carries no information.
pub fn continued_fraction(j: u64, two_to_m: u64, modulus: u64) -> Vec<u64> {
    if j == 0 || two_to_m == 0 {
        return Vec::new();
    }
    let (mut num, mut den) = (j as u128, two_to_m as u128);
    // Denominators k_{i-2}, k_{i-1} of the two previous convergents.
    let (mut q_prev, mut q) = (1u128, 0u128);
    let mut out: Vec<u64> = Vec::new();
    while den != 0 {
        let term = num / den;
        (num, den) = (den, num - term * den);
        let next = term * q + q_prev;
        (q_prev, q) = (q, next);
        if q >= modulus as u128 {
            break;
        }
        let d = q as u64;
        if !out.contains(&d) {
            out.push(d);
        }
    }
    out.sort_unstable();
    out
}

/// Multiplicative order of `a` modulo `modulus` by brute force.
pub fn classical_order(a: u64, modulus: u64) -> Option<u64> {
    if gcd(a, modulus) != 1 {
        return None;
    }
    let mut value = a % modulus;
    for r in 1..=modulus {
        if value == 1 {
            return Some(r);
        }
        value = crate::revarith::modmul(value, a, modulus);
    }
    None
}

fn prime_factors(mut value: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= value {
        if value.is_multiple_of(p) {
            out.push(p);
            while value.is_multiple_of(p) {
                value /= p;
            }
        }
        p += 1;
    }
    if value > 1 {
        out.push(value);
    }
    out
}

/// Shrinks an exponent with `a^r ≡ 1` to the smallest one.
fn minimal_exponent(a: u64, mut r: u64, modulus: u64) -> u64 {
    for p in prime_factors(r) {
        while r.is_multiple_of(p) && modpow(a, r / p, modulus) == 1 {
            r /= p;
        }
    }
    r
}

/// Classical post-processing of one measurement `j`: tests every convergent
/// denominator `d` and its multiples `c·d` for `c` in `1..=n`. Returns the
/// order if found, the denominators and the exponents tried.
pub fn recover_order(a: u64, modulus: u64, j: u64, m: usize) -> (Option<u64>, Vec<u64>, Vec<u64>) {
    let n = bit_length(modulus) as u64;
    let candidates = continued_fraction(j, 1u64 << m, modulus);
    let mut tested = Vec::new();
    for &d in &candidates {
        for c in 1..=n {
            let r = c * d;
            tested.push(r);
            if modpow(a, r, modulus) == 1 {
                return (Some(minimal_exponent(a, r, modulus)), candidates, tested);
            }
        }
    }
    (None, candidates, tested)
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundRecord {
    pub j: u64,
    pub candidates: Vec<u64>,
    /// Exponents checked against `a^r ≡ 1 (mod N)`.
    pub tested: Vec<u64>,
    pub resources: Option<RoundResources>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderResult {
    pub a: u64,
    pub modulus: u64,
    pub m: usize,
    pub r: Option<u64>,
    pub rounds_used: usize,
    pub transcript: Vec<RoundRecord>,
    /// Pre-measurement distribution of the first round.
    #[serde(skip)]
    pub first_distribution: Distribution,
}

/// `8⌈log₂ log₂ N⌉ + 8`.
pub fn default_max_rounds(modulus: u64) -> usize {
    let ll = (modulus.max(4) as f64).log2().log2().ceil() as usize;
    8 * ll + 8
}

/// Finds the order of `a` modulo `modulus` by repeated phase estimation.
pub fn find_order(
    a: u64,
    modulus: u64,
    m: usize,
    rng: &mut RandomSource,
    mode: &Mode,
    max_rounds: usize,
) -> Result<OrderResult> {
    find_order_with_stream(a, modulus, m, rng, mode, max_rounds, 0)
}

fn find_order_with_stream(
    a: u64,
    modulus: u64,
    m: usize,
    rng: &mut RandomSource,
    mode: &Mode,
    max_rounds: usize,
    stream_base: u64,
) -> Result<OrderResult> {
    if modulus < 3 || a <= 1 || a >= modulus {
        return Err(Error::Precondition(format!(
            "need 1 < a < N, got a = {a}, N = {modulus}"
        )));
    }
    if gcd(a, modulus) != 1 {
        return Err(Error::NotCoprime { a, modulus });
    }
    let source = ModularExponentiation::new(a, modulus, m)?;
    let pe = PhaseEstimation::new(&source)?;
    let mut transcript = Vec::new();
    let mut first_distribution = Distribution::new();
    for round in 0..max_rounds {
        let protocol = rng.fork(stream_base + round as u64 + 1);
        let est = pe.run(mode, rng, protocol)?;
        if round == 0 {
            first_distribution = est.distribution.clone();
        }
        let (found, candidates, tested) = recover_order(a, modulus, est.j, m);
        transcript.push(RoundRecord {
            j: est.j,
            candidates,
            tested,
            resources: est.resources,
        });
        if found.is_some() {
            return Ok(OrderResult {
                a,
                modulus,
                m,
                r: found,
                rounds_used: round + 1,
                transcript,
                first_distribution,
            });
        }
    }
    Ok(OrderResult {
        a,
        modulus,
        m,
        r: None,
        rounds_used: max_rounds,
        transcript,
        first_distribution,
    })
}

/// Why `N` was not factored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Failure {
    TooSmall,
    Even,
    Prime,
    PrimePower {
        base: u64,
        exponent: u32,
    },
    /// Every attempt ended without a usable order.
    AttemptsExhausted {
        attempts: usize,
    },
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::TooSmall => write!(f, "N must be at least 3"),
            Failure::Even => write!(f, "N must be odd"),
            Failure::Prime => write!(f, "N is prime"),
            Failure::PrimePower { base, exponent } => write!(f, "N = {base}^{exponent} is a prime power"),
            Failure::AttemptsExhausted { attempts } => {
                write!(f, "no factor found after {attempts} choice(s) of a")
            }
        }
    }
}

pub fn is_prime(value: u64) -> bool {
    value >= 2 && prime_factors(value) == [value]
}

/// `Some((p, k))` when `value = p^k` with `p` prime and `k ≥ 2`.
pub fn prime_power(value: u64) -> Option<(u64, u32)> {
    let factors = prime_factors(value);
    if factors.len() != 1 || factors[0] == value {
        return None;
    }
    let p = factors[0];
    let mut k = 0;
    let mut v = value;
    while v.is_multiple_of(p) {
        v /= p;
        k += 1;
    }
    Some((p, k))
}

/// Classical screen applied before any quantum run.
pub fn classical_rejection(modulus: u64) -> Option<Failure> {
    if modulus < 3 {
        Some(Failure::TooSmall)
    } else if modulus.is_multiple_of(2) {
        Some(Failure::Even)
    } else if is_prime(modulus) {
        Some(Failure::Prime)
    } else {
        prime_power(modulus).map(|(base, exponent)| Failure::PrimePower { base, exponent })
    }
}

#[derive(Debug, Clone)]
pub struct FactorConfig {
    /// Fixed base; random bases are drawn when `None`.
    pub a: Option<u64>,
    /// Counting-register width; `2n` when `None`.
    pub m: Option<usize>,
    pub max_rounds: Option<usize>,
    /// Bases tried before giving up (ignored when `a` is fixed).
    pub max_attempts: usize,
}

impl Default for FactorConfig {
    fn default() -> Self {
        FactorConfig {
            a: None,
            m: None,
            max_rounds: None,
            max_attempts: 16,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Attempt {
    pub a: u64,
    /// Set when `gcd(a, N) > 1` already gave a factor.
    pub gcd_shortcut: Option<u64>,
    pub order: Option<OrderResult>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FactoringOutcome {
    pub modulus: u64,
    pub factors: std::result::Result<(u64, u64), Failure>,
    pub attempts: Vec<Attempt>,
    pub seed: u64,
}

/// Factors `modulus`, returning the smaller factor first.
pub fn factor(modulus: u64, rng: &mut RandomSource, mode: &Mode, config: &FactorConfig) -> Result<FactoringOutcome> {
    let seed = rng.seed();
    let done = |factors, attempts| FactoringOutcome {
        modulus,
        factors,
        attempts,
        seed,
    };
    if let Some(f) = classical_rejection(modulus) {
        return Ok(done(Err(f), Vec::new()));
    }
    let n = bit_length(modulus);
    let m = config.m.unwrap_or(2 * n);
    let max_rounds = config.max_rounds.unwrap_or_else(|| default_max_rounds(modulus));
    let budget = if config.a.is_some() {
        1
    } else {
        config.max_attempts.max(1)
    };
    let mut attempts = Vec::new();
    for attempt in 0..budget {
        let a = match config.a {
            Some(a) => a,
            None => rng.range(2, modulus),
        };
        let g = gcd(a, modulus);
        if g > 1 {
            attempts.push(Attempt {
                a,
                gcd_shortcut: Some(g),
                order: None,
            });
            let pair = (g.min(modulus / g), g.max(modulus / g));
            return Ok(done(Ok(pair), attempts));
        }
        let order = find_order_with_stream(a, modulus, m, rng, mode, max_rounds, (attempt as u64) << 32)?;
        let r = order.r;
        attempts.push(Attempt {
            a,
            gcd_shortcut: None,
            order: Some(order),
        });
        if let Some(r) = r {
            if r % 2 == 0 {
                let half = modpow(a, r / 2, modulus);
                if half != modulus - 1 {
                    let p = gcd(half + modulus - 1, modulus);
                    let q = gcd(half + 1, modulus);
                    if p > 1 && q > 1 && p * q == modulus {
                        return Ok(done(Ok((p.min(q), p.max(q))), attempts));
                    }
                    if p > 1 && p < modulus {
                        let other = modulus / p;
                        return Ok(done(Ok((p.min(other), p.max(other))), attempts));
                    }
                }
            }
        }
    }
    Ok(done(Err(Failure::AttemptsExhausted { attempts: budget }), attempts))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convergent_denominators() {
        assert_eq!(continued_fraction(192, 256, 15), vec![1, 4]);
        assert!(continued_fraction(0, 256, 15).is_empty());
        assert!(continued_fraction(85, 256, 15).contains(&3));
        assert_eq!(continued_fraction(128, 256, 15), vec![1, 2]);
    }

    #[test]
    fn classical_screens() {
        assert_eq!(classical_rejection(16), Some(Failure::Even));
        assert_eq!(classical_rejection(13), Some(Failure::Prime));
        assert_eq!(
            classical_rejection(9),
            Some(Failure::PrimePower { base: 3, exponent: 2 })
        );
        assert_eq!(classical_rejection(15), None);
        assert_eq!(classical_rejection(21), None);
    }

    #[test]
    fn order_helpers() {
        assert_eq!(classical_order(7, 15), Some(4));
        assert_eq!(classical_order(2, 21), Some(6));
        assert_eq!(minimal_exponent(7, 8, 15), 4);
        assert_eq!(minimal_exponent(4, 12, 15), 2);
        assert_eq!(default_max_rounds(15), 24);
    }

    #[test]
    fn exact_phases_are_deterministic() {
        let z = PhaseOracle::new(0.5, 1).unwrap();
        let r2 = PhaseOracle::new(0.25, 2).unwrap();
        for seed in 0..10 {
            let mut rng = RandomSource::new(seed);
            assert_eq!(phase_estimate(&z, &Mode::Monolithic, &mut rng).unwrap().j, 1);
            assert_eq!(phase_estimate(&r2, &Mode::Monolithic, &mut rng).unwrap().j, 1);
        }
    }

    #[test]
    fn gcd_shortcut() {
        let mut rng = RandomSource::new(0);
        let cfg = FactorConfig {
            a: Some(6),
            ..FactorConfig::default()
        };
        let out = factor(15, &mut rng, &Mode::Monolithic, &cfg).unwrap();
        assert_eq!(out.factors, Ok((3, 5)));
        assert_eq!(out.attempts[0].gcd_shortcut, Some(3));
    }
}
