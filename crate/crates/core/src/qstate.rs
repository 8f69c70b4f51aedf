//! Sparse statevector kernel.
//!
//! A [`QuantumState`] stores only the basis states with non-negligible
//! amplitude. Qubit `q` is bit `q` of the basis index, so up to 128 qubits can
//! be allocated; the algorithms simulated here keep their support near the
//! size of the counting-register superposition, never near `2^num_qubits`.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::{FxHashMap, FxHashSet};

use crate::error::{Error, Result};
use crate::gate::{Control, GateKind, Polarity, Qubit};

pub type BasisIndex = u128;
pub type Amplitude = Complex64;

/// Marginal distribution over a list of qubits. Keys pack the listed qubits
/// little-endian: the first listed qubit is bit 0.
pub type Distribution = BTreeMap<u64, f64>;

pub const DEFAULT_PRUNE_EPSILON: f64 = 1e-12;
pub const MAX_QUBITS: usize = 128;

#[derive(Debug, Clone)]
pub struct QuantumState {
    amplitudes: FxHashMap<BasisIndex, Amplitude>,
    num_qubits: usize,
    prune_epsilon: f64,
    peak_support: usize,
}

impl QuantumState {
    /// All `num_qubits` qubits in `|0⟩`.
    pub fn new(num_qubits: usize) -> Result<Self> {
        Self::from_basis(num_qubits, 0)
    }

    pub fn from_basis(num_qubits: usize, index: BasisIndex) -> Result<Self> {
        if num_qubits > MAX_QUBITS {
            return Err(Error::TooManyQubits(num_qubits));
        }
        let mut state = QuantumState {
            amplitudes: FxHashMap::default(),
            num_qubits,
            prune_epsilon: DEFAULT_PRUNE_EPSILON,
            peak_support: 1,
        };
        state.check_index(index)?;
        state.amplitudes.insert(index, Complex64::new(1.0, 0.0));
        Ok(state)
    }

    /// Builds a state from explicit amplitudes, which must already be normalized.
    pub fn from_amplitudes<I>(num_qubits: usize, amplitudes: I) -> Result<Self>
    where
        I: IntoIterator<Item = (BasisIndex, Amplitude)>,
    {
        let mut state = Self::new(num_qubits)?;
        state.amplitudes.clear();
        for (index, amp) in amplitudes {
            state.check_index(index)?;
            if !(amp.re.is_finite() && amp.im.is_finite()) {
                return Err(Error::InvalidGate(format!("non-finite amplitude {amp}")));
            }
            *state.amplitudes.entry(index).or_default() += amp;
        }
        state.prune();
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized(norm));
        }
        state.peak_support = state.amplitudes.len();
        Ok(state)
    }

    fn check_index(&self, index: BasisIndex) -> Result<()> {
        if self.num_qubits < MAX_QUBITS && index >> self.num_qubits != 0 {
            let highest = (MAX_QUBITS - 1) - index.leading_zeros() as usize;
            return Err(Error::QubitOutOfRange {
                qubit: highest,
                allocated: self.num_qubits,
            });
        }
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn prune_epsilon(&self) -> f64 {
        self.prune_epsilon
    }

    pub fn set_prune_epsilon(&mut self, epsilon: f64) {
        self.prune_epsilon = epsilon;
        self.prune();
    }

    /// Number of stored basis states.
    pub fn support(&self) -> usize {
        self.amplitudes.len()
    }

    /// Largest support observed since construction or the last [`reset_peak_support`](Self::reset_peak_support).
    pub fn peak_support(&self) -> usize {
        self.peak_support
    }

    pub fn reset_peak_support(&mut self) {
        self.peak_support = self.amplitudes.len();
    }

    pub fn amplitude(&self, index: BasisIndex) -> Amplitude {
        self.amplitudes.get(&index).copied().unwrap_or_default()
    }

    /// Stored amplitudes in ascending basis order.
    pub fn sorted_amplitudes(&self) -> Vec<(BasisIndex, Amplitude)> {
        let mut out: Vec<_> = self.amplitudes.iter().map(|(&k, &v)| (k, v)).collect();
        out.sort_unstable_by_key(|&(k, _)| k);
        out
    }

    pub fn norm_sqr(&self) -> f64 {
        self.sorted_amplitudes().iter().map(|(_, a)| a.norm_sqr()).sum()
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

    fn prune(&mut self) {
        let eps = self.prune_epsilon;
        self.amplitudes.retain(|_, a| a.norm() >= eps);
    }

    fn note_support(&mut self) {
        self.peak_support = self.peak_support.max(self.amplitudes.len());
    }

    /// Applies `gate` to `targets`, conditioned on every control matching its polarity.
    pub fn apply_gate(&mut self, gate: GateKind, targets: &[Qubit], controls: &[Control]) -> Result<()> {
        gate.validate()?;
        if targets.len() != gate.arity() {
            return Err(Error::ArityMismatch {
                gate: match gate {
                    GateKind::Swap => "SWAP",
                    _ => "single-qubit gate",
                },
                expected: gate.arity(),
                got: targets.len(),
            });
        }
        let mut seen = FxHashSet::default();
        for q in targets.iter().chain(controls.iter().map(|c| &c.qubit)) {
            self.check_qubit(*q)?;
            if !seen.insert(q.0) {
                return Err(Error::DuplicateQubit(q.0));
            }
        }

        let mut mask: BasisIndex = 0;
        let mut want: BasisIndex = 0;
        for c in controls {
            let bit = 1u128 << c.qubit.0;
            mask |= bit;
            if c.polarity == Polarity::Positive {
                want |= bit;
            }
        }
        let fires = |index: BasisIndex| index & mask == want;

        match gate {
            GateKind::X => {
                let bit = 1u128 << targets[0].0;
                self.permute(|i| if fires(i) { i ^ bit } else { i });
            }
            GateKind::Swap => {
                let (a, b) = (1u128 << targets[0].0, 1u128 << targets[1].0);
                self.permute(|i| {
                    if fires(i) && ((i & a == 0) != (i & b == 0)) {
                        i ^ a ^ b
                    } else {
                        i
                    }
                });
            }
            GateKind::Z | GateKind::R(_) | GateKind::RInv(_) | GateKind::Phase(_) => {
                let phase = gate.diagonal_phase().expect("diagonal gate");
                let bit = 1u128 << targets[0].0;
                for (&i, amp) in self.amplitudes.iter_mut() {
                    if fires(i) && i & bit != 0 {
                        *amp *= phase;
                    }
                }
                self.prune();
            }
            GateKind::H => {
                let bit = 1u128 << targets[0].0;
                let mut next: FxHashMap<BasisIndex, Amplitude> = FxHashMap::default();
                next.reserve(self.amplitudes.len() * 2);
                for (i, amp) in self.sorted_amplitudes() {
                    if !fires(i) {
                        *next.entry(i).or_default() += amp;
                        continue;
                    }
                    let scaled = amp * FRAC_1_SQRT_2;
                    let one = i & bit != 0;
                    *next.entry(i & !bit).or_default() += scaled;
                    *next.entry(i | bit).or_default() += if one { -scaled } else { scaled };
                }
                self.amplitudes = next;
                self.prune();
            }
        }
        self.note_support();
        Ok(())
    }

    fn permute(&mut self, f: impl Fn(BasisIndex) -> BasisIndex) {
        let entries: Vec<_> = self.amplitudes.drain().collect();
        for (i, amp) in entries {
            self.amplitudes.insert(f(i), amp);
        }
    }

    /// Probability that `qubit` reads 1.
    pub fn probability_one(&self, qubit: Qubit) -> Result<f64> {
        self.check_qubit(qubit)?;
        let bit = 1u128 << qubit.0;
        Ok(self
            .sorted_amplitudes()
            .iter()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Projective Z-basis measurement of one qubit.
    pub fn measure(&mut self, qubit: Qubit, rng: &mut RandomSource) -> Result<bool> {
        self.check_qubit(qubit)?;
        let total = self.norm_sqr();
        if total <= 0.0 {
            return Err(Error::ZeroProbability);
        }
        let p_one = self.probability_one(qubit)? / total;
        let outcome = rng.next_f64() >= 1.0 - p_one;
        self.collapse(qubit, outcome)?;
        Ok(outcome)
    }

    /// Projects onto `qubit = outcome` and renormalizes.
    pub fn collapse(&mut self, qubit: Qubit, outcome: bool) -> Result<()> {
        self.check_qubit(qubit)?;
        let bit = 1u128 << qubit.0;
        self.amplitudes.retain(|&i, _| (i & bit != 0) == outcome);
        let norm = self.norm_sqr();
        if norm <= 0.0 {
            return Err(Error::ZeroProbability);
        }
        let scale = norm.sqrt().recip();
        for amp in self.amplitudes.values_mut() {
            *amp *= scale;
        }
        self.prune();
        Ok(())
    }

    /// Exact marginal distribution over `qubits` (no sampling).
    pub fn exact_distribution(&self, qubits: &[Qubit]) -> Result<Distribution> {
        if qubits.len() > 64 {
            return Err(Error::InvalidGate(format!(
                "distribution over {} qubits does not fit a 64-bit key",
                qubits.len()
            )));
        }
        let mut seen = FxHashSet::default();
        for q in qubits {
            self.check_qubit(*q)?;
            if !seen.insert(q.0) {
                return Err(Error::DuplicateQubit(q.0));
            }
        }
        let mut dist = Distribution::new();
        for (i, amp) in self.sorted_amplitudes() {
            let key = extract_bits(i, qubits);
            *dist.entry(key).or_default() += amp.norm_sqr();
        }
        dist.retain(|_, p| *p > 0.0);
        Ok(dist)
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &QuantumState) -> f64 {
        let mut overlap = Complex64::default();
        for (i, a) in self.sorted_amplitudes() {
            overlap += a.conj() * other.amplitude(i);
        }
        overlap.norm_sqr()
    }

    /// Largest amplitude-wise difference over the union of both supports.
    pub fn max_difference(&self, other: &QuantumState) -> f64 {
        let keys: FxHashSet<_> = self.amplitudes.keys().chain(other.amplitudes.keys()).copied().collect();
        keys.into_iter()
            .map(|k| (self.amplitude(k) - other.amplitude(k)).norm())
            .fold(0.0, f64::max)
    }
}

/// Packs the bits of `index` at positions `qubits` into a little-endian integer.
pub fn extract_bits(index: BasisIndex, qubits: &[Qubit]) -> u64 {
    qubits
        .iter()
        .enumerate()
        .fold(0u64, |acc, (pos, q)| acc | ((((index >> q.0) & 1) as u64) << pos))
}

/// Seeded PRNG used for every measurement outcome.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        RandomSource {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream derived from the same seed.
    pub fn fork(&self, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        RandomSource { seed: self.seed, rng }
    }

    pub fn next_f64(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform integer in `[low, high)`.
    pub fn range(&mut self, low: u64, high: u64) -> u64 {
        self.rng.random_range(low..high)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn cnot_flips_target_when_control_set() {
        // |10⟩ in ket order q1 q0 means q0 = 0... here the example is control q0 = 1.
        let mut s = QuantumState::from_basis(2, 0b01).unwrap();
        s.apply_gate(GateKind::X, &[Qubit(1)], &[Control::pos(Qubit(0))])
            .unwrap();
        assert_eq!(s.sorted_amplitudes(), vec![(0b11, c(1.0, 0.0))]);
    }

    #[test]
    fn hadamard_on_zero() {
        let mut s = QuantumState::new(1).unwrap();
        s.apply_gate(GateKind::H, &[Qubit(0)], &[]).unwrap();
        assert!((s.amplitude(0) - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((s.amplitude(1) - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn r2_gives_phase_i() {
        let mut s = QuantumState::new(1).unwrap();
        s.apply_gate(GateKind::H, &[Qubit(0)], &[]).unwrap();
        s.apply_gate(GateKind::R(2), &[Qubit(0)], &[]).unwrap();
        assert!((s.amplitude(1) - c(0.0, FRAC_1_SQRT_2)).norm() < 1e-15);
    }

    #[test]
    fn negative_control_fires_on_zero() {
        let mut s = QuantumState::new(2).unwrap();
        s.apply_gate(GateKind::X, &[Qubit(1)], &[Control::neg(Qubit(0))])
            .unwrap();
        assert_eq!(s.sorted_amplitudes()[0].0, 0b10);
    }

    #[test]
    fn gate_errors() {
        let mut s = QuantumState::new(3).unwrap();
        assert_eq!(
            s.apply_gate(GateKind::X, &[Qubit(1)], &[Control::pos(Qubit(1))]),
            Err(Error::DuplicateQubit(1))
        );
        assert!(matches!(
            s.apply_gate(GateKind::Swap, &[Qubit(1)], &[]),
            Err(Error::ArityMismatch { .. })
        ));
        assert!(matches!(
            s.apply_gate(GateKind::R(1), &[Qubit(0)], &[]),
            Err(Error::InvalidGate(_))
        ));
        assert!(matches!(
            s.apply_gate(GateKind::X, &[Qubit(3)], &[]),
            Err(Error::QubitOutOfRange { .. })
        ));
    }

    #[test]
    fn measure_bell_pair_collapses_both() {
        let mut zeros = 0;
        for seed in 0..200 {
            let mut s = QuantumState::new(2).unwrap();
            s.apply_gate(GateKind::H, &[Qubit(0)], &[]).unwrap();
            s.apply_gate(GateKind::X, &[Qubit(1)], &[Control::pos(Qubit(0))])
                .unwrap();
            let mut rng = RandomSource::new(seed);
            let bit = s.measure(Qubit(0), &mut rng).unwrap();
            let expected = if bit { 0b11 } else { 0b00 };
            assert_eq!(s.support(), 1);
            assert!((s.amplitude(expected).norm() - 1.0).abs() < 1e-12);
            zeros += usize::from(!bit);
        }
        assert!((60..140).contains(&zeros), "zeros = {zeros}");
    }

    #[test]
    fn measure_deterministic_one() {
        let mut s = QuantumState::from_basis(1, 1).unwrap();
        let mut rng = RandomSource::new(3);
        assert!(s.measure(Qubit(0), &mut rng).unwrap());
        assert_eq!(s.sorted_amplitudes(), vec![(1, c(1.0, 0.0))]);
    }

    #[test]
    fn born_rule_frequency() {
        let mut zeros = 0;
        let mut rng = RandomSource::new(11);
        let trials = 5000;
        for _ in 0..trials {
            let mut s = QuantumState::from_amplitudes(1, [(0, c(0.6, 0.0)), (1, c(0.8, 0.0))]).unwrap();
            zeros += usize::from(!s.measure(Qubit(0), &mut rng).unwrap());
        }
        let freq = zeros as f64 / trials as f64;
        assert!((freq - 0.36).abs() < 0.03, "freq = {freq}");
    }

    #[test]
    fn measure_errors() {
        let mut s = QuantumState::new(1).unwrap();
        let mut rng = RandomSource::new(0);
        assert!(matches!(
            s.measure(Qubit(4), &mut rng),
            Err(Error::QubitOutOfRange { .. })
        ));
        assert_eq!(s.collapse(Qubit(0), true), Err(Error::ZeroProbability));
    }

    #[test]
    fn distribution_of_bell_pair() {
        let mut s = QuantumState::new(2).unwrap();
        s.apply_gate(GateKind::H, &[Qubit(0)], &[]).unwrap();
        s.apply_gate(GateKind::X, &[Qubit(1)], &[Control::pos(Qubit(0))])
            .unwrap();
        let d = s.exact_distribution(&[Qubit(0), Qubit(1)]).unwrap();
        assert_eq!(d.len(), 2);
        assert!((d[&0b00] - 0.5).abs() < 1e-12);
        assert!((d[&0b11] - 0.5).abs() < 1e-12);
        assert_eq!(
            s.exact_distribution(&[Qubit(0), Qubit(0)]),
            Err(Error::DuplicateQubit(0))
        );
    }

    #[test]
    fn from_amplitudes_rejects_unnormalized() {
        assert!(matches!(
            QuantumState::from_amplitudes(1, [(0, c(1.0, 0.0)), (1, c(1.0, 0.0))]),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn dust_is_pruned() {
        let mut s = QuantumState::new(1).unwrap();
        s.apply_gate(GateKind::H, &[Qubit(0)], &[]).unwrap();
        s.apply_gate(GateKind::H, &[Qubit(0)], &[]).unwrap();
        assert_eq!(s.support(), 1);
    }

    #[test]
    fn forked_streams_are_reproducible_and_distinct() {
        let base = RandomSource::new(42);
        let mut a = base.fork(1);
        let mut b = base.fork(1);
        let mut other = base.fork(2);
        let xs: Vec<f64> = (0..4).map(|_| a.next_f64()).collect();
        let ys: Vec<f64> = (0..4).map(|_| b.next_f64()).collect();
        let zs: Vec<f64> = (0..4).map(|_| other.next_f64()).collect();
        assert_eq!(xs, ys);
        assert_ne!(xs, zs);
    }
}
