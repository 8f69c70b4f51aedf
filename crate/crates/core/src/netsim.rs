//! Network machine model: nodes with bounded registers and channel qubits,
//! cat-entangler/disentangler, non-local CNOT, non-local controlled blocks,
//! teleportation and the resource ledger.
//!
//! The whole network shares one [`QuantumState`]. Node `i` owns a contiguous
//! range of physical qubits: its data slots first, then its channel qubits.
//! Every local operation is checked to stay inside one node.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::circuit::{Circuit, Condition, Operation};
use crate::error::{Error, Result};
use crate::gate::{Control, GateKind, Qubit};
use crate::qstate::{QuantumState, RandomSource};

/// Channel qubits per node when none is requested explicitly.
///
/// The distributed adder needs up to three non-local controls at once, so
/// three channel qubits are the default rather than two.
pub const DEFAULT_CHANNEL_QUBITS: usize = 3;

const PURITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NodeSpec {
    pub id: NodeId,
    /// Total live qubits the node can hold, channel qubits included.
    pub register_capacity: usize,
    pub channel_qubits: usize,
}

impl NodeSpec {
    pub fn new(id: usize, register_capacity: usize, channel_qubits: usize) -> Self {
        NodeSpec {
            id: NodeId(id),
            register_capacity,
            channel_qubits,
        }
    }

    pub fn data_slots(&self) -> usize {
        self.register_capacity - self.channel_qubits
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    nodes: Vec<NodeSpec>,
    quantum_links: BTreeSet<(NodeId, NodeId)>,
    classical_links: BTreeSet<(NodeId, NodeId)>,
}

fn link(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    (a.min(b), a.max(b))
}

impl Topology {
    /// Fully connected topology over `nodes`, whose ids must be `0..len`.
    pub fn complete(nodes: Vec<NodeSpec>) -> Result<Self> {
        let mut links = BTreeSet::new();
        for a in &nodes {
            for b in &nodes {
                if a.id < b.id {
                    links.insert((a.id, b.id));
                }
            }
        }
        Self::with_links(nodes, links.clone(), links)
    }

    pub fn with_links(
        nodes: Vec<NodeSpec>,
        quantum_links: BTreeSet<(NodeId, NodeId)>,
        classical_links: BTreeSet<(NodeId, NodeId)>,
    ) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidTopology("no nodes".into()));
        }
        for (i, node) in nodes.iter().enumerate() {
            if node.id != NodeId(i) {
                return Err(Error::InvalidTopology(format!(
                    "node ids must be unique and dense; position {i} holds id {}",
                    node.id
                )));
            }
            if node.register_capacity < 1 || node.channel_qubits >= node.register_capacity {
                return Err(Error::InvalidTopology(format!(
                    "node {} has capacity {} with {} channel qubits",
                    node.id, node.register_capacity, node.channel_qubits
                )));
            }
        }
        let normalize = |links: BTreeSet<(NodeId, NodeId)>| -> Result<BTreeSet<_>> {
            links
                .into_iter()
                .map(|(a, b)| {
                    if a.0 >= nodes.len() {
                        Err(Error::UnknownNode(a))
                    } else if b.0 >= nodes.len() {
                        Err(Error::UnknownNode(b))
                    } else {
                        Ok(link(a, b))
                    }
                })
                .collect()
        };
        Ok(Topology {
            quantum_links: normalize(quantum_links)?,
            classical_links: normalize(classical_links)?,
            nodes,
        })
    }

    /// `count` identical nodes, fully connected.
    pub fn uniform(count: usize, register_capacity: usize, channel_qubits: usize) -> Result<Self> {
        Self::complete(
            (0..count)
                .map(|i| NodeSpec::new(i, register_capacity, channel_qubits))
                .collect(),
        )
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Result<&NodeSpec> {
        self.nodes.get(id.0).ok_or(Error::UnknownNode(id))
    }

    pub fn linked(&self, a: NodeId, b: NodeId) -> bool {
        self.quantum_links.contains(&link(a, b))
    }

    pub fn classically_linked(&self, a: NodeId, b: NodeId) -> bool {
        self.classical_links.contains(&link(a, b))
    }

    pub fn total_qubits(&self) -> usize {
        self.nodes.iter().map(|n| n.register_capacity).sum()
    }
}

/// Communication costs of a distributed run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ResourceLedger {
    pub ebits_consumed: u64,
    pub epr_established: u64,
    pub cbits_sent: BTreeMap<(NodeId, NodeId), u64>,
    pub teleports: u64,
    pub qubit_transmissions: u64,
}

impl ResourceLedger {
    pub fn cbits(&self, from: NodeId, to: NodeId) -> u64 {
        self.cbits_sent.get(&(from, to)).copied().unwrap_or(0)
    }

    pub fn total_cbits(&self) -> u64 {
        self.cbits_sent.values().sum()
    }

    fn send_bit(&mut self, from: NodeId, to: NodeId) {
        *self.cbits_sent.entry((from, to)).or_insert(0) += 1;
    }

    /// Counter-wise difference `self − earlier`.
    pub fn since(&self, earlier: &ResourceLedger) -> ResourceLedger {
        let mut cbits_sent = BTreeMap::new();
        for (&k, &v) in &self.cbits_sent {
            let d = v - earlier.cbits_sent.get(&k).copied().unwrap_or(0);
            if d > 0 {
                cbits_sent.insert(k, d);
            }
        }
        ResourceLedger {
            ebits_consumed: self.ebits_consumed - earlier.ebits_consumed,
            epr_established: self.epr_established - earlier.epr_established,
            cbits_sent,
            teleports: self.teleports - earlier.teleports,
            qubit_transmissions: self.qubit_transmissions - earlier.qubit_transmissions,
        }
    }

    pub fn is_zero(&self) -> bool {
        *self == ResourceLedger::default()
    }

    /// Adds every counter of `other` into `self`.
    pub fn absorb(&mut self, other: &ResourceLedger) {
        self.ebits_consumed += other.ebits_consumed;
        self.epr_established += other.epr_established;
        for (&k, &v) in &other.cbits_sent {
            *self.cbits_sent.entry(k).or_insert(0) += v;
        }
        self.teleports += other.teleports;
        self.qubit_transmissions += other.qubit_transmissions;
    }
}

struct CbitMap<'a>(&'a BTreeMap<(NodeId, NodeId), u64>);

impl Serialize for CbitMap<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for ((from, to), count) in self.0 {
            map.serialize_entry(&format!("{from}->{to}"), count)?;
        }
        map.end()
    }
}

impl Serialize for ResourceLedger {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(6))?;
        map.serialize_entry("ebits", &self.ebits_consumed)?;
        map.serialize_entry("epr_established", &self.epr_established)?;
        map.serialize_entry("cbits", &CbitMap(&self.cbits_sent))?;
        map.serialize_entry("cbits_total", &self.total_cbits())?;
        map.serialize_entry("teleports", &self.teleports)?;
        map.serialize_entry("transmissions", &self.qubit_transmissions)?;
        map.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ChannelStatus {
    Free,
    Epr(u64),
    Cat(u64),
    /// Measured; holds a known classical value until reset.
    Spent,
}

/// A shared Bell pair between two channel qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EprPair {
    id: u64,
    pub node_a: NodeId,
    pub node_b: NodeId,
    pub a: Qubit,
    pub b: Qubit,
}

/// A control qubit on `node_a` shared with a mirror channel qubit on `node_b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CatState {
    id: u64,
    pub node_a: NodeId,
    pub node_b: NodeId,
    pub control: Qubit,
    pub mirror: Qubit,
}

#[derive(Debug, Clone)]
pub struct Network {
    topology: Topology,
    state: QuantumState,
    ledger: ResourceLedger,
    rng: RandomSource,
    base: Vec<usize>,
    node_of: Vec<NodeId>,
    channel: Vec<Option<ChannelStatus>>,
    occupied: Vec<bool>,
    live: Vec<usize>,
    peak_live: Vec<usize>,
    next_id: u64,
}

impl Network {
    pub fn new(topology: Topology, rng: RandomSource) -> Result<Self> {
        let total = topology.total_qubits();
        let state = QuantumState::new(total)?;
        let mut base = Vec::new();
        let mut node_of = Vec::with_capacity(total);
        let mut channel = Vec::with_capacity(total);
        let mut offset = 0;
        for node in topology.nodes() {
            base.push(offset);
            for slot in 0..node.register_capacity {
                node_of.push(node.id);
                channel.push((slot >= node.data_slots()).then_some(ChannelStatus::Free));
            }
            offset += node.register_capacity;
        }
        let count = topology.nodes().len();
        Ok(Network {
            topology,
            state,
            ledger: ResourceLedger::default(),
            rng,
            base,
            node_of,
            channel,
            occupied: vec![false; total],
            live: vec![0; count],
            peak_live: vec![0; count],
            next_id: 0,
        })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn state(&self) -> &QuantumState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut QuantumState {
        &mut self.state
    }

    pub fn ledger(&self) -> &ResourceLedger {
        &self.ledger
    }

    pub fn rng_mut(&mut self) -> &mut RandomSource {
        &mut self.rng
    }

    pub fn node_of(&self, q: Qubit) -> Result<NodeId> {
        self.node_of.get(q.0).copied().ok_or(Error::QubitOutOfRange {
            qubit: q.0,
            allocated: self.node_of.len(),
        })
    }

    /// Physical qubit of data slot `slot` on `node`.
    pub fn data_qubit(&self, node: NodeId, slot: usize) -> Result<Qubit> {
        let spec = self.topology.node(node)?;
        if slot >= spec.data_slots() {
            return Err(Error::NoFreeSlot(node));
        }
        Ok(Qubit(self.base[node.0] + slot))
    }

    pub fn is_channel(&self, q: Qubit) -> bool {
        self.channel.get(q.0).is_some_and(|c| c.is_some())
    }

    pub fn is_occupied(&self, q: Qubit) -> bool {
        self.occupied.get(q.0).copied().unwrap_or(false)
    }

    /// Live qubits (occupied data slots plus busy channels) on `node`.
    pub fn live_count(&self, node: NodeId) -> usize {
        self.live[node.0]
    }

    pub fn peak_live_count(&self, node: NodeId) -> usize {
        self.peak_live[node.0]
    }

    fn bump_live(&mut self, node: NodeId, up: bool) {
        let live = &mut self.live[node.0];
        if up {
            *live += 1;
        } else {
            *live -= 1;
        }
        self.peak_live[node.0] = self.peak_live[node.0].max(*live);
    }

    /// Marks a specific data slot as holding a qubit.
    pub fn claim(&mut self, q: Qubit) -> Result<()> {
        let node = self.node_of(q)?;
        if self.is_channel(q) || self.occupied[q.0] {
            return Err(Error::NoFreeSlot(node));
        }
        self.occupied[q.0] = true;
        self.bump_live(node, true);
        Ok(())
    }

    /// Claims the lowest free data slot on `node`.
    pub fn allocate(&mut self, node: NodeId) -> Result<Qubit> {
        let spec = self.topology.node(node)?;
        let base = self.base[node.0];
        let slot = (base..base + spec.data_slots())
            .find(|&q| !self.occupied[q])
            .ok_or(Error::NoFreeSlot(node))?;
        self.claim(Qubit(slot))?;
        Ok(Qubit(slot))
    }

    /// Releases a data slot; its qubit must already be `|0⟩`.
    pub fn release(&mut self, q: Qubit) -> Result<()> {
        let node = self.node_of(q)?;
        if !self.occupied[q.0] {
            return Err(Error::Precondition(format!("slot {q} is not occupied")));
        }
        if self.state.probability_one(q)? > PURITY_TOLERANCE {
            return Err(Error::Precondition(format!("slot {q} released while not |0>")));
        }
        self.occupied[q.0] = false;
        self.bump_live(node, false);
        Ok(())
    }

    pub fn free_slots(&self, node: NodeId) -> usize {
        let spec = &self.topology.nodes()[node.0];
        let base = self.base[node.0];
        (base..base + spec.data_slots()).filter(|&q| !self.occupied[q]).count()
    }

    pub fn free_channels(&self, node: NodeId) -> usize {
        self.channels_of(node)
            .filter(|q| self.channel[q.0] == Some(ChannelStatus::Free))
            .count()
    }

    fn channels_of(&self, node: NodeId) -> impl Iterator<Item = Qubit> + '_ {
        let spec = &self.topology.nodes()[node.0];
        let start = self.base[node.0] + spec.data_slots();
        (start..start + spec.channel_qubits).map(Qubit)
    }

    fn set_channel(&mut self, q: Qubit, status: ChannelStatus) {
        let node = self.node_of[q.0];
        let was_free = self.channel[q.0] == Some(ChannelStatus::Free);
        let now_free = status == ChannelStatus::Free;
        self.channel[q.0] = Some(status);
        if was_free != now_free {
            self.bump_live(node, was_free);
        }
    }

    fn take_channel(&self, node: NodeId) -> Result<Qubit> {
        self.topology.node(node)?;
        self.channels_of(node)
            .find(|q| self.channel[q.0] == Some(ChannelStatus::Free))
            .ok_or(Error::NoFreeChannel(node))
    }

    fn fresh_id(&mut self) -> u64 {
        self.next_id += 1;
        self.next_id
    }

    fn check_same_node(&self, qubits: &[Qubit]) -> Result<Option<NodeId>> {
        let mut node = None;
        for &q in qubits {
            let here = self.node_of(q)?;
            match node {
                None => node = Some(here),
                Some(n) if n != here => return Err(Error::NotLocal(n, here)),
                _ => {}
            }
        }
        Ok(node)
    }

    /// Applies a gate whose qubits must all sit on one node.
    pub fn apply_local(&mut self, kind: GateKind, targets: &[Qubit], controls: &[Control]) -> Result<()> {
        let all: Vec<Qubit> = targets
            .iter()
            .copied()
            .chain(controls.iter().map(|c| c.qubit))
            .collect();
        self.check_same_node(&all)?;
        self.state.apply_gate(kind, targets, controls)
    }

    /// Measures a qubit in place (local operation).
    pub fn measure_local(&mut self, q: Qubit) -> Result<bool> {
        self.node_of(q)?;
        self.state.measure(q, &mut self.rng)
    }

    fn send(&mut self, from: NodeId, to: NodeId) -> Result<()> {
        if from != to && !self.topology.classically_linked(from, to) {
            return Err(Error::NoLink(from, to));
        }
        self.ledger.send_bit(from, to);
        Ok(())
    }

    /// Entangles one free channel qubit on each node into `(|00⟩+|11⟩)/√2`.
    pub fn establish_epr(&mut self, a: NodeId, b: NodeId) -> Result<EprPair> {
        self.topology.node(a)?;
        self.topology.node(b)?;
        if a == b {
            return Err(Error::Precondition("EPR pair needs two distinct nodes".into()));
        }
        if !self.topology.linked(a, b) {
            return Err(Error::NoLink(a, b));
        }
        let qa = self.take_channel(a)?;
        let qb = self.take_channel(b)?;
        // Prepared on `a`, then one half travels to `b`.
        self.state.apply_gate(GateKind::H, &[qa], &[])?;
        self.state.apply_gate(GateKind::X, &[qb], &[Control::pos(qa)])?;
        let id = self.fresh_id();
        self.set_channel(qa, ChannelStatus::Epr(id));
        self.set_channel(qb, ChannelStatus::Epr(id));
        self.ledger.epr_established += 1;
        self.ledger.qubit_transmissions += 1;
        Ok(EprPair {
            id,
            node_a: a,
            node_b: b,
            a: qa,
            b: qb,
        })
    }

    /// Turns `control` and `pair` into a cat-like state shared with `pair.node_b`.
    pub fn cat_entangle(&mut self, control: Qubit, pair: EprPair) -> Result<CatState> {
        if self.channel[pair.a.0] != Some(ChannelStatus::Epr(pair.id))
            || self.channel[pair.b.0] != Some(ChannelStatus::Epr(pair.id))
        {
            return Err(Error::EprConsumed);
        }
        let home = self.node_of(control)?;
        if home != pair.node_a {
            return Err(Error::NotLocal(home, pair.node_a));
        }
        self.state
            .apply_gate(GateKind::X, &[pair.a], &[Control::pos(control)])?;
        let bit = self.state.measure(pair.a, &mut self.rng)?;
        self.set_channel(pair.a, ChannelStatus::Spent);
        self.send(pair.node_a, pair.node_b)?;
        if bit {
            self.state.apply_gate(GateKind::X, &[pair.b], &[])?;
        }
        self.ledger.ebits_consumed += 1;
        let id = self.fresh_id();
        self.set_channel(pair.b, ChannelStatus::Cat(id));
        Ok(CatState {
            id,
            node_a: pair.node_a,
            node_b: pair.node_b,
            control,
            mirror: pair.b,
        })
    }

    /// Measures the mirror in the X basis and corrects the control's phase.
    pub fn cat_disentangle(&mut self, cat: CatState) -> Result<Qubit> {
        if self.channel[cat.mirror.0] != Some(ChannelStatus::Cat(cat.id)) {
            return Err(Error::CatConsumed);
        }
        self.state.apply_gate(GateKind::H, &[cat.mirror], &[])?;
        let bit = self.state.measure(cat.mirror, &mut self.rng)?;
        self.set_channel(cat.mirror, ChannelStatus::Spent);
        self.send(cat.node_b, cat.node_a)?;
        if bit {
            self.state.apply_gate(GateKind::Z, &[cat.control], &[])?;
        }
        Ok(cat.control)
    }

    /// Returns measured channel qubits of `node` to `|0⟩`; fails if any channel
    /// still holds half of an EPR pair or a cat-like state.
    pub fn reset_channels(&mut self, node: NodeId) -> Result<()> {
        self.topology.node(node)?;
        let channels: Vec<Qubit> = self.channels_of(node).collect();
        for &q in &channels {
            if matches!(
                self.channel[q.0],
                Some(ChannelStatus::Epr(_)) | Some(ChannelStatus::Cat(_))
            ) {
                return Err(Error::ChannelEntangled(q.0));
            }
        }
        self.reset_spent(node)
    }

    /// Resets only the measured channels of `node`, leaving live ones alone.
    pub fn reset_spent(&mut self, node: NodeId) -> Result<()> {
        self.topology.node(node)?;
        let channels: Vec<Qubit> = self.channels_of(node).collect();
        for q in channels {
            if self.channel[q.0] != Some(ChannelStatus::Spent) {
                continue;
            }
            let p = self.state.probability_one(q)?;
            if p > PURITY_TOLERANCE && p < 1.0 - PURITY_TOLERANCE {
                return Err(Error::ChannelEntangled(q.0));
            }
            if p > 0.5 {
                self.state.apply_gate(GateKind::X, &[q], &[])?;
            }
            self.set_channel(q, ChannelStatus::Free);
        }
        Ok(())
    }

    /// Resets the channels of every node.
    pub fn reset_all_channels(&mut self) -> Result<()> {
        for i in 0..self.topology.nodes().len() {
            self.reset_channels(NodeId(i))?;
        }
        Ok(())
    }

    /// Runs `body` on one node, with every gate additionally controlled by `extra`.
    pub fn run_local(&mut self, body: &Circuit, extra: &[Control]) -> Result<()> {
        if body.num_qubits() > self.state.num_qubits() {
            return Err(Error::WidthMismatch(format!(
                "body spans {} qubits, network has {}",
                body.num_qubits(),
                self.state.num_qubits()
            )));
        }
        for instr in body.instructions() {
            let mut involved = instr.qubits();
            involved.extend(extra.iter().map(|c| c.qubit));
            self.check_same_node(&involved)?;
        }
        for instr in body.instructions() {
            let fires = match &instr.condition {
                Condition::Always => true,
                Condition::Constant(bit) => *bit,
                Condition::Parity(_) => {
                    return Err(Error::NotReversible(
                        "body may not depend on measurement results".into(),
                    ))
                }
            };
            match &instr.op {
                Operation::Gate {
                    kind,
                    targets,
                    controls,
                } => {
                    if fires {
                        let mut all = controls.clone();
                        all.extend_from_slice(extra);
                        self.state.apply_gate(*kind, targets, &all)?;
                    }
                }
                _ => return Err(Error::NotReversible("body may not contain measurements".into())),
            }
        }
        Ok(())
    }

    /// CNOT between qubits on two different nodes: 1 ebit, 1 cbit each way.
    pub fn nonlocal_cnot(&mut self, control: Qubit, target: Qubit) -> Result<()> {
        let a = self.node_of(control)?;
        let b = self.node_of(target)?;
        if a == b {
            return Err(Error::Precondition(
                "non-local CNOT needs qubits on different nodes".into(),
            ));
        }
        let pair = self.establish_epr(a, b)?;
        let cat = self.cat_entangle(control, pair)?;
        self.state
            .apply_gate(GateKind::X, &[target], &[Control::pos(cat.mirror)])?;
        self.cat_disentangle(cat)?;
        self.reset_channels(a)?;
        self.reset_channels(b)
    }

    /// Runs `body` (local to one node) controlled by a qubit on another node,
    /// distributing the control once for the whole body.
    pub fn nonlocal_controlled_circuit(&mut self, control: Qubit, body: &Circuit) -> Result<()> {
        let a = self.node_of(control)?;
        let qubits: Vec<Qubit> = body.instructions().iter().flat_map(|i| i.qubits()).collect();
        let Some(b) = self.check_same_node(&qubits)? else {
            return Ok(());
        };
        if a == b {
            return Err(Error::Precondition("control already lives on the body's node".into()));
        }
        let pair = self.establish_epr(a, b)?;
        let cat = self.cat_entangle(control, pair)?;
        self.run_local(body, &[Control::pos(cat.mirror)])?;
        self.cat_disentangle(cat)?;
        self.reset_channels(a)?;
        self.reset_channels(b)
    }

    /// Moves the state of `q` into the lowest free data slot on `dest`; `q`
    /// ends in `|0⟩` and its slot is released.
    pub fn teleport(&mut self, q: Qubit, dest: NodeId) -> Result<Qubit> {
        let spec = self.topology.node(dest)?;
        let base = self.base[dest.0];
        let slot = (base..base + spec.data_slots())
            .find(|&p| !self.occupied[p])
            .ok_or(Error::NoFreeSlot(dest))?;
        self.teleport_into(q, Qubit(slot))?;
        Ok(Qubit(slot))
    }

    /// Teleports the state of `q` into the free data slot `slot` on another node.
    pub fn teleport_into(&mut self, q: Qubit, slot: Qubit) -> Result<()> {
        let src = self.node_of(q)?;
        let dest = self.node_of(slot)?;
        if src == dest {
            return Err(Error::Precondition("teleport to the same node".into()));
        }
        if self.is_channel(slot) || self.occupied[slot.0] {
            return Err(Error::NoFreeSlot(dest));
        }
        let pair = self.establish_epr(src, dest)?;
        let cat = self.cat_entangle(q, pair)?;
        // Disentangle on the source side so the state stays on the mirror.
        self.state.apply_gate(GateKind::H, &[q], &[])?;
        let bit = self.state.measure(q, &mut self.rng)?;
        self.send(src, dest)?;
        if bit {
            self.state.apply_gate(GateKind::Z, &[cat.mirror], &[])?;
            self.state.apply_gate(GateKind::X, &[q], &[])?;
        }
        self.claim(slot)?;
        // Swapping with the |0⟩ slot frees the channel qubit.
        self.state.apply_gate(GateKind::Swap, &[cat.mirror, slot], &[])?;
        self.set_channel(cat.mirror, ChannelStatus::Spent);
        if self.occupied[q.0] {
            self.release(q)?;
        }
        self.ledger.teleports += 1;
        self.reset_spent(src)?;
        self.reset_spent(dest)
    }

    /// Declares that the `|0⟩` qubit in `from` now lives in the free slot `to`
    /// of any node. Nothing is sent: both slots hold `|0⟩`.
    pub fn relocate_zero(&mut self, from: Qubit, to: Qubit) -> Result<()> {
        if self.state.probability_one(from)? > PURITY_TOLERANCE {
            return Err(Error::Precondition(format!(
                "qubit {from} is not |0> and cannot be relocated for free"
            )));
        }
        self.claim(to)?;
        self.release(from)
    }
}
