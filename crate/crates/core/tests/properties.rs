mod common;

use distshor::revarith::{build_adder, build_an};
use distshor::{Circuit, Control, GateKind, QuantumState, Qubit, RandomSource, RegisterLayout};
use proptest::prelude::*;

fn kind_strategy() -> impl Strategy<Value = GateKind> {
    prop_oneof![
        Just(GateKind::X),
        Just(GateKind::Z),
        Just(GateKind::H),
        (2u32..12).prop_map(GateKind::R),
        (2u32..12).prop_map(GateKind::RInv),
        (0.0f64..1.0).prop_map(GateKind::Phase),
        Just(GateKind::Swap),
    ]
}

/// Random gate: kind, distinct qubit picks (targets first), and control count.
fn gate_strategy(n: usize) -> impl Strategy<Value = (GateKind, Vec<usize>, usize, Vec<bool>)> {
    (
        kind_strategy(),
        Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
        0usize..3,
        proptest::collection::vec(any::<bool>(), 3),
    )
        .prop_map(|(k, q, c, p)| (k, q, c, p))
}

fn build(n: usize, gates: &[(GateKind, Vec<usize>, usize, Vec<bool>)]) -> Circuit {
    let mut c = Circuit::new(n, "random");
    for (kind, order, controls, polarity) in gates {
        let arity = kind.arity();
        if arity > n {
            continue;
        }
        let targets: Vec<Qubit> = order[..arity].iter().map(|&i| Qubit(i)).collect();
        let ctl: Vec<Control> = order[arity..]
            .iter()
            .take(*controls)
            .zip(polarity)
            .map(|(&i, &p)| {
                if p {
                    Control::pos(Qubit(i))
                } else {
                    Control::neg(Qubit(i))
                }
            })
            .collect();
        c.gate(*kind, &targets, &ctl).unwrap();
    }
    c
}

/// A normalized superposition over all basis states of `n` qubits.
fn spread_state(n: usize, seed: u64) -> QuantumState {
    let mut rng = RandomSource::new(seed);
    let mut s = QuantumState::new(n).unwrap();
    for q in 0..n {
        s.apply_gate(GateKind::H, &[Qubit(q)], &[]).unwrap();
        s.apply_gate(GateKind::Phase(rng.next_f64()), &[Qubit(q)], &[]).unwrap();
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gates_preserve_norm(
        (n, gates, seed) in (1usize..=7).prop_flat_map(|n| {
            (Just(n), proptest::collection::vec(gate_strategy(n), 1..40), any::<u64>())
        })
    ) {
        let c = build(n, &gates);
        let mut s = spread_state(n, seed);
        c.execute(&mut s, &mut RandomSource::new(seed)).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn reverse_undoes_random_circuits(
        (n, gates, seed) in (1usize..=6).prop_flat_map(|n| {
            (Just(n), proptest::collection::vec(gate_strategy(n), 1..30), any::<u64>())
        })
    ) {
        let c = build(n, &gates);
        let start = spread_state(n, seed);
        let mut s = start.clone();
        let mut rng = RandomSource::new(0);
        c.execute(&mut s, &mut rng).unwrap();
        c.reverse().unwrap().execute(&mut s, &mut rng).unwrap();
        prop_assert!(s.max_difference(&start) < 1e-10);
    }
}

fn assert_reverse_is_identity(c: &Circuit) {
    let n = c.num_qubits();
    let inverse = c.reverse().unwrap();
    let mut rng = RandomSource::new(0);
    for input in 0..1u128 << n {
        let mut s = QuantumState::from_basis(n, input).unwrap();
        c.execute(&mut s, &mut rng).unwrap();
        inverse.execute(&mut s, &mut rng).unwrap();
        let back = s.amplitude(input);
        assert!(
            (back.re - 1.0).abs() < 1e-10 && back.im.abs() < 1e-10,
            "input {input:#b}"
        );
        assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn reversal_identity_is_exhaustive_up_to_ten_qubits() {
    let mut rng = RandomSource::new(2024);
    for n in 1..=10usize {
        let gates: Vec<_> = (0..3 * n + 4)
            .map(|_| {
                let kind = match rng.range(0, 7) {
                    0 => GateKind::X,
                    1 => GateKind::Z,
                    2 => GateKind::H,
                    3 => GateKind::R(rng.range(2, 9) as u32),
                    4 => GateKind::RInv(rng.range(2, 9) as u32),
                    5 => GateKind::Phase(rng.next_f64()),
                    _ => GateKind::Swap,
                };
                let mut order: Vec<usize> = (0..n).collect();
                for i in (1..n).rev() {
                    order.swap(i, rng.range(0, i as u64 + 1) as usize);
                }
                let controls = rng.range(0, 3) as usize;
                (kind, order, controls, vec![true, false, true])
            })
            .collect();
        assert_reverse_is_identity(&build(n, &gates));
    }
}

#[test]
fn arithmetic_blocks_reverse_exhaustively() {
    // One-bit registers keep the pools at 6 and 10 qubits.
    let layout = RegisterLayout::new(1, 0).unwrap();
    assert_reverse_is_identity(&build_an(1, 2, &layout).unwrap());
    assert_reverse_is_identity(&build_adder(1, 2, &layout).unwrap());
    let layout = RegisterLayout::new(1, 4).unwrap();
    assert_eq!(layout.num_qubits(), 10);
    assert_reverse_is_identity(&build_an(0, 2, &layout).unwrap());
}

#[test]
fn measurement_keeps_norm() {
    let mut rng = RandomSource::new(5);
    for seed in 0..50 {
        let mut s = spread_state(5, seed);
        for q in 0..5 {
            s.measure(Qubit(q), &mut rng).unwrap();
            assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
        }
        assert_eq!(s.support(), 1);
    }
}
