use distshor::netsim::DEFAULT_CHANNEL_QUBITS;
use distshor::{Circuit, Control, GateKind, Network, NodeId, QuantumState, Qubit, RandomSource, Topology};

const TRIALS: u64 = 120;
const A: NodeId = NodeId(0);
const B: NodeId = NodeId(1);

/// Two nodes with three data slots each, all claimed, in a random state.
/// The reference state sees the same gates on the same physical indices.
fn prepared(seed: u64) -> (Network, QuantumState, Vec<Qubit>, Vec<Qubit>) {
    let topo = Topology::uniform(2, 3 + DEFAULT_CHANNEL_QUBITS, DEFAULT_CHANNEL_QUBITS).unwrap();
    let mut net = Network::new(topo.clone(), RandomSource::new(seed).fork(9)).unwrap();
    let mut reference = QuantumState::new(topo.total_qubits()).unwrap();
    let on_a: Vec<Qubit> = (0..3).map(|s| net.data_qubit(A, s).unwrap()).collect();
    let on_b: Vec<Qubit> = (0..3).map(|s| net.data_qubit(B, s).unwrap()).collect();
    for &q in on_a.iter().chain(&on_b) {
        net.claim(q).unwrap();
    }
    let mut rng = RandomSource::new(seed);
    let local = |net: &mut Network, reference: &mut QuantumState, kind, targets: &[Qubit], controls: &[Control]| {
        net.apply_local(kind, targets, controls).unwrap();
        reference.apply_gate(kind, targets, controls).unwrap();
    };
    for side in [&on_a, &on_b] {
        for &q in side.iter() {
            local(&mut net, &mut reference, GateKind::H, &[q], &[]);
            local(&mut net, &mut reference, GateKind::Phase(rng.next_f64()), &[q], &[]);
        }
        local(
            &mut net,
            &mut reference,
            GateKind::X,
            &[side[1]],
            &[Control::pos(side[0])],
        );
        local(
            &mut net,
            &mut reference,
            GateKind::Phase(rng.next_f64()),
            &[side[2]],
            &[Control::pos(side[1])],
        );
    }
    (net, reference, on_a, on_b)
}

fn assert_channels_clean(net: &Network) {
    for node in [A, B] {
        assert_eq!(
            net.free_channels(node),
            DEFAULT_CHANNEL_QUBITS,
            "node {node} has a live channel"
        );
    }
    for q in 0..net.state().num_qubits() {
        if net.is_channel(Qubit(q)) {
            let p = net.state().probability_one(Qubit(q)).unwrap();
            assert!(p < 1e-12, "channel {q} left with P(1) = {p}");
        }
    }
}

#[test]
fn nonlocal_cnot_matches_local_cnot() {
    for seed in 0..TRIALS {
        let (mut net, mut reference, on_a, on_b) = prepared(seed);
        net.nonlocal_cnot(on_a[0], on_b[2]).unwrap();
        reference
            .apply_gate(GateKind::X, &[on_b[2]], &[Control::pos(on_a[0])])
            .unwrap();
        assert!(net.state().max_difference(&reference) < 1e-12, "seed {seed}");
        let ledger = net.ledger();
        assert_eq!(ledger.ebits_consumed, 1);
        assert_eq!(ledger.total_cbits(), 2);
        assert_eq!(ledger.cbits(A, B), 1);
        assert_eq!(ledger.cbits(B, A), 1);
        assert_channels_clean(&net);
    }
}

#[test]
fn controlled_circuit_costs_one_ebit_regardless_of_size() {
    for seed in 0..TRIALS {
        let body_len = 1 + (seed as usize % 12);
        let (mut net, mut reference, on_a, on_b) = prepared(seed);
        let mut body = Circuit::new(net.state().num_qubits(), "body");
        let mut rng = RandomSource::new(seed + 1000);
        for i in 0..body_len {
            let t = on_b[i % 3];
            let c = on_b[(i + 1) % 3];
            match rng.range(0, 4) {
                0 => body.h(t).unwrap(),
                1 => body.cnot(c, t).unwrap(),
                2 => body.gate(GateKind::R(2 + i as u32 % 5), &[t], &[]).unwrap(),
                _ => body.swap(t, c).unwrap(),
            }
        }
        net.nonlocal_controlled_circuit(on_a[1], &body).unwrap();
        body.add_controls(&[Control::pos(on_a[1])])
            .unwrap()
            .execute(&mut reference, &mut RandomSource::new(0))
            .unwrap();
        assert!(net.state().max_difference(&reference) < 1e-12, "seed {seed}");
        assert_eq!(net.ledger().ebits_consumed, 1, "body of {body_len} gates");
        assert_eq!(net.ledger().total_cbits(), 2);
        assert_channels_clean(&net);
    }
}

#[test]
fn shared_control_amortizes_over_the_body() {
    let (mut net, _, on_a, on_b) = prepared(1);
    let mut body = Circuit::new(net.state().num_qubits(), "body");
    for &t in &on_b {
        body.x(t).unwrap();
    }
    net.nonlocal_controlled_circuit(on_a[0], &body).unwrap();
    let shared = net.ledger().clone();
    for &t in &on_b {
        net.nonlocal_cnot(on_a[0], t).unwrap();
    }
    let separate = net.ledger().since(&shared);
    assert_eq!(shared.ebits_consumed, 1);
    assert_eq!(separate.ebits_consumed, 3);
    assert_eq!(separate.total_cbits(), 6);
}

#[test]
fn cat_round_trip_is_identity() {
    for seed in 0..TRIALS {
        let (mut net, reference, on_a, _) = prepared(seed);
        let pair = net.establish_epr(A, B).unwrap();
        let cat = net.cat_entangle(on_a[seed as usize % 3], pair).unwrap();
        net.cat_disentangle(cat).unwrap();
        net.reset_channels(A).unwrap();
        net.reset_channels(B).unwrap();
        assert!(net.state().max_difference(&reference) < 1e-12, "seed {seed}");
        assert_eq!(net.ledger().ebits_consumed, 1);
        assert_eq!(net.ledger().cbits(A, B), 1);
        assert_eq!(net.ledger().cbits(B, A), 1);
        assert_channels_clean(&net);
    }
}

#[test]
fn teleport_needs_a_free_slot() {
    let (mut net, _, on_a, _) = prepared(0);
    let before = net.ledger().clone();
    assert!(net.teleport(on_a[0], B).is_err());
    assert_eq!(net.ledger(), &before, "a refused teleport costs nothing");
}

#[test]
fn teleport_moves_the_state() {
    for seed in 0..TRIALS {
        let topo = Topology::uniform(2, 2 + DEFAULT_CHANNEL_QUBITS, DEFAULT_CHANNEL_QUBITS).unwrap();
        let mut net = Network::new(topo.clone(), RandomSource::new(seed)).unwrap();
        let src = net.allocate(A).unwrap();
        let partner = net.allocate(A).unwrap();
        let mut rng = RandomSource::new(seed + 77);
        let prep = |s: &mut QuantumState| {
            s.apply_gate(GateKind::H, &[src], &[]).unwrap();
            s.apply_gate(GateKind::X, &[partner], &[Control::pos(src)]).unwrap();
        };
        prep(net.state_mut());
        let turns = rng.next_f64();
        net.state_mut().apply_gate(GateKind::Phase(turns), &[src], &[]).unwrap();
        let dest = net.teleport(src, B).unwrap();
        assert_eq!(net.node_of(dest).unwrap(), B);
        let mut reference = QuantumState::new(topo.total_qubits()).unwrap();
        reference.apply_gate(GateKind::H, &[dest], &[]).unwrap();
        reference
            .apply_gate(GateKind::X, &[partner], &[Control::pos(dest)])
            .unwrap();
        reference.apply_gate(GateKind::Phase(turns), &[dest], &[]).unwrap();
        assert!(net.state().max_difference(&reference) < 1e-12, "seed {seed}");
        let ledger = net.ledger();
        assert_eq!(ledger.teleports, 1);
        assert_eq!(ledger.ebits_consumed, 1);
        assert_eq!(ledger.cbits(A, B), 2);
        assert_eq!(ledger.cbits(B, A), 0);
        assert_eq!(net.live_count(A), 1);
        assert_eq!(net.live_count(B), 1);
        assert_channels_clean(&net);
    }
}

#[test]
fn channel_reuse_is_unbounded() {
    let (mut net, _, on_a, on_b) = prepared(3);
    for i in 0..50 {
        net.nonlocal_cnot(on_a[i % 3], on_b[(i + 1) % 3]).unwrap();
        assert_channels_clean(&net);
    }
    assert_eq!(net.ledger().ebits_consumed, 50);
}

#[test]
fn live_channels_block_strict_reset() {
    let (mut net, _, _, _) = prepared(4);
    net.establish_epr(A, B).unwrap();
    assert!(net.reset_channels(A).is_err());
    let mut net = prepared(5).0;
    for _ in 0..DEFAULT_CHANNEL_QUBITS {
        net.establish_epr(A, B).unwrap();
    }
    assert!(net.establish_epr(A, B).is_err());
}

#[test]
fn gates_across_nodes_are_rejected() {
    let (mut net, _, on_a, on_b) = prepared(6);
    assert!(net
        .apply_local(GateKind::X, &[on_b[0]], &[Control::pos(on_a[0])])
        .is_err());
    assert!(net.nonlocal_cnot(on_a[0], on_a[1]).is_err());
}
