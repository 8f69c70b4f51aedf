//! Placement of logical qubits onto small nodes and distributed execution of
//! logical circuits with non-local control blocks and teleportation.
//!
//! The executor walks a logical [`Circuit`] and groups consecutive gates that
//! share a label and an execution node into one block. Each block:
//!
//! 1. brings every qubit it writes (and every control homed on its node) to
//!    the execution node, teleporting qubits that already carry state and
//!    relocating untouched `|0⟩` qubits for free;
//! 2. shares each remaining remote control once through a cat-like state;
//! 3. applies its gates locally, gated by the mirrors;
//! 4. disentangles the controls and resets the channels.
//!
//! A block that shares at least one control counts as one non-local control
//! circuit (NL) under its label; every teleport counts under the label of the
//! block that needed it (T).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::circuit::{Circuit, Condition, Instruction, Operation};
use crate::error::{Error, Result};
use crate::gate::{Control, GateKind, Qubit};
use crate::netsim::{CatState, Network, NodeId, NodeSpec, ResourceLedger, Topology, DEFAULT_CHANNEL_QUBITS};
use crate::qstate::{BasisIndex, QuantumState, RandomSource};
use crate::revarith::RegisterLayout;

/// Extra data slots per adder node: one for the overflow carry, one spare.
pub const ADDER_EXTRA_SLOTS: usize = 2;

/// Home of one logical qubit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RolePlacement {
    pub role: String,
    pub logical: Qubit,
    pub node: NodeId,
    pub slot: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlacementPlan {
    pub nodes: Vec<NodeSpec>,
    /// Indexed by logical qubit.
    pub roles: Vec<RolePlacement>,
}

impl PlacementPlan {
    /// Builds a plan from explicit homes and checks it against node capacities.
    pub fn new(nodes: Vec<NodeSpec>, roles: Vec<RolePlacement>) -> Result<Self> {
        let mut reserved = vec![0usize; nodes.len()];
        let mut taken = rustc_hash::FxHashSet::default();
        for (i, r) in roles.iter().enumerate() {
            if r.logical != Qubit(i) {
                return Err(Error::Placement(format!(
                    "role `{}` at position {i} names logical qubit {}",
                    r.role, r.logical
                )));
            }
            let spec = nodes.get(r.node.0).ok_or(Error::UnknownNode(r.node))?;
            if r.slot >= spec.data_slots() {
                return Err(Error::Placement(format!(
                    "role `{}` uses slot {} but node {} has {} data slots",
                    r.role,
                    r.slot,
                    r.node,
                    spec.data_slots()
                )));
            }
            if !taken.insert((r.node, r.slot)) {
                return Err(Error::Placement(format!(
                    "slot {} of node {} assigned twice",
                    r.slot, r.node
                )));
            }
            reserved[r.node.0] += 1;
        }
        for (spec, &used) in nodes.iter().zip(&reserved) {
            if used + spec.channel_qubits > spec.register_capacity {
                return Err(Error::Placement(format!(
                    "node {} needs {} qubits but holds {}",
                    spec.id,
                    used + spec.channel_qubits,
                    spec.register_capacity
                )));
            }
        }
        Ok(PlacementPlan { nodes, roles })
    }

    /// Every logical qubit on a single node; nothing is ever non-local.
    pub fn single_node(num_logical: usize, channel_qubits: usize) -> Result<Self> {
        let node = NodeSpec::new(0, num_logical + channel_qubits.max(1), channel_qubits.max(1));
        let roles = (0..num_logical)
            .map(|i| RolePlacement {
                role: format!("q[{i}]"),
                logical: Qubit(i),
                node: NodeId(0),
                slot: i,
            })
            .collect();
        Self::new(vec![node], roles)
    }

    /// Node `g` holds `groups[g]` (logical ids, which must cover `0..total`),
    /// plus `extra_slots` spare data slots and `channel_qubits` channels.
    pub fn from_groups(groups: &[Vec<Qubit>], extra_slots: usize, channel_qubits: usize) -> Result<Self> {
        let total: usize = groups.iter().map(Vec::len).sum();
        let mut roles: Vec<Option<RolePlacement>> = vec![None; total];
        let mut nodes = Vec::new();
        for (g, group) in groups.iter().enumerate() {
            nodes.push(NodeSpec::new(
                g,
                group.len() + extra_slots + channel_qubits,
                channel_qubits,
            ));
            for (slot, &q) in group.iter().enumerate() {
                let entry = roles
                    .get_mut(q.0)
                    .ok_or_else(|| Error::Placement(format!("logical qubit {q} out of range")))?;
                if entry.is_some() {
                    return Err(Error::Placement(format!("logical qubit {q} placed twice")));
                }
                *entry = Some(RolePlacement {
                    role: format!("q[{}]", q.0),
                    logical: q,
                    node: NodeId(g),
                    slot,
                });
            }
        }
        let roles = roles
            .into_iter()
            .enumerate()
            .map(|(i, r)| r.ok_or_else(|| Error::Placement(format!("logical qubit {i} not placed"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(nodes, roles)
    }

    pub fn num_logical(&self) -> usize {
        self.roles.len()
    }

    pub fn home(&self, q: Qubit) -> Result<&RolePlacement> {
        self.roles
            .get(q.0)
            .ok_or_else(|| Error::Placement(format!("logical qubit {q} is not in the plan")))
    }

    pub fn topology(&self) -> Result<Topology> {
        Topology::complete(self.nodes.clone())
    }

    /// Text table, one role per line: `role | node | slot`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for r in &self.roles {
            let _ = writeln!(out, "{} | {} | {}", r.role, r.node, r.slot);
        }
        out
    }
}

/// The seven-node plan for the exponentiation layout of [`RegisterLayout::new(n, m)`].
///
/// Nodes 0 and 1 hold the two halves of the exponent register, node 2 holds
/// `x`, and nodes 3–6 each hold a slice of width `⌈n/4⌉` of `b`, `s`, `iout`
/// and `out` plus [`ADDER_EXTRA_SLOTS`] spare slots; the overflow carry lives
/// in the first spare slot of the last slice. Every node has the same
/// capacity `4⌈n/4⌉ + 5` (which is `n + 5` when `4 | n`).
pub fn plan_placement(n: usize, m: usize) -> Result<PlacementPlan> {
    plan_placement_with_channels(n, m, DEFAULT_CHANNEL_QUBITS)
}

pub fn plan_placement_with_channels(n: usize, m: usize, channel_qubits: usize) -> Result<PlacementPlan> {
    let layout = RegisterLayout::new(n, m)?;
    let w = n.div_ceil(4);
    let capacity = 4 * w + ADDER_EXTRA_SLOTS + channel_qubits;
    let nodes: Vec<NodeSpec> = (0..7).map(|i| NodeSpec::new(i, capacity, channel_qubits)).collect();
    let names = layout.roles();
    let mut roles = Vec::with_capacity(layout.num_qubits());
    let half = m.div_ceil(2);
    let mut place = |q: Qubit, node: usize, slot: usize| {
        roles.push(RolePlacement {
            role: names[q.0].0.clone(),
            logical: q,
            node: NodeId(node),
            slot,
        });
    };
    for (i, &q) in layout.k.iter().enumerate() {
        if i < half {
            place(q, 0, i);
        } else {
            place(q, 1, i - half);
        }
    }
    for (i, &q) in layout.x.iter().enumerate() {
        place(q, 2, i);
    }
    let slice = |i: usize| (3 + i / w, i % w);
    for (i, &q) in layout.b.iter().enumerate() {
        let (node, off) = slice(i);
        place(q, node, off);
    }
    for (i, &q) in layout.s.iter().enumerate() {
        let (node, off) = slice(i);
        place(q, node, w + off);
    }
    place(layout.carry, 6, 4 * w);
    for (i, &q) in layout.iout.iter().enumerate() {
        let (node, off) = slice(i);
        place(q, node, 2 * w + off);
    }
    for (i, &q) in layout.out.iter().enumerate() {
        let (node, off) = slice(i);
        place(q, node, 3 * w + off);
    }
    roles.sort_by_key(|r| r.logical);
    PlacementPlan::new(nodes, roles)
}

/// Non-local control circuits, cat ebits and teleports attributed to a label.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct NlTEntry {
    pub nl: u64,
    pub ebits: u64,
    pub teleports: u64,
}

impl std::ops::AddAssign for NlTEntry {
    fn add_assign(&mut self, rhs: Self) {
        self.nl += rhs.nl;
        self.ebits += rhs.ebits;
        self.teleports += rhs.teleports;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct NlTReport {
    pub per_label: BTreeMap<String, NlTEntry>,
    pub totals: NlTEntry,
    /// Largest number of controls shared into one block.
    pub max_fan_in: usize,
}

impl NlTReport {
    /// Sum over labels equal to `prefix` or below it.
    pub fn under(&self, prefix: &str) -> NlTEntry {
        let mut sum = NlTEntry::default();
        for (label, e) in &self.per_label {
            if label == prefix || (label.starts_with(prefix) && label[prefix.len()..].starts_with('/')) {
                sum += *e;
            }
        }
        sum
    }

    /// Sum over labels whose path contains `segment`.
    pub fn with_segment(&self, segment: &str) -> NlTEntry {
        let mut sum = NlTEntry::default();
        for (label, e) in &self.per_label {
            if label.split('/').any(|s| s == segment) {
                sum += *e;
            }
        }
        sum
    }

    /// Totals per block instance: labels are grouped by their path up to the
    /// first segment accepted by `is_level`.
    pub fn instances(&self, is_level: impl Fn(&str) -> bool) -> BTreeMap<String, NlTEntry> {
        let mut out: BTreeMap<String, NlTEntry> = BTreeMap::new();
        for (label, e) in &self.per_label {
            let mut end = 0;
            for seg in label.split('/') {
                end += seg.len();
                if is_level(seg) {
                    *out.entry(label[..end].to_string()).or_default() += *e;
                    break;
                }
                end += 1;
            }
        }
        out
    }

    fn add(&mut self, label: &str, entry: NlTEntry) {
        *self.per_label.entry(label.to_string()).or_default() += entry;
        self.totals += entry;
    }
}

/// Executes logical circuits on the network described by a [`PlacementPlan`].
#[derive(Debug, Clone)]
pub struct DistributedEngine {
    plan: PlacementPlan,
    network: Network,
    /// Logical qubit → current physical qubit.
    loc: Vec<Qubit>,
    /// Physical qubit → logical qubit it currently holds.
    occupant: FxHashMap<usize, usize>,
    /// Physical qubit → `true` if it is some logical qubit's home slot.
    reserved: Vec<bool>,
    home_phys: Vec<Qubit>,
    /// `true` until the logical qubit is first written.
    fresh: Vec<bool>,
    bits: Vec<Option<bool>>,
    report: NlTReport,
}

struct Shared {
    logical: usize,
    cat: CatState,
}

impl DistributedEngine {
    pub fn new(plan: PlacementPlan, rng: RandomSource) -> Result<Self> {
        let mut network = Network::new(plan.topology()?, rng)?;
        let total = network.state().num_qubits();
        let mut reserved = vec![false; total];
        let mut loc = Vec::with_capacity(plan.num_logical());
        let mut occupant = FxHashMap::default();
        for r in &plan.roles {
            let q = network.data_qubit(r.node, r.slot)?;
            network.claim(q)?;
            reserved[q.0] = true;
            occupant.insert(q.0, r.logical.0);
            loc.push(q);
        }
        let n = plan.num_logical();
        Ok(DistributedEngine {
            home_phys: loc.clone(),
            plan,
            network,
            loc,
            occupant,
            reserved,
            fresh: vec![true; n],
            bits: Vec::new(),
            report: NlTReport::default(),
        })
    }

    pub fn plan(&self) -> &PlacementPlan {
        &self.plan
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn ledger(&self) -> &ResourceLedger {
        self.network.ledger()
    }

    pub fn report(&self) -> &NlTReport {
        &self.report
    }

    /// Current physical position of a logical qubit.
    pub fn location(&self, q: Qubit) -> Result<Qubit> {
        self.loc
            .get(q.0)
            .copied()
            .ok_or_else(|| Error::Placement(format!("logical qubit {q} is not in the plan")))
    }

    /// Largest live-qubit count any node reached.
    pub fn peak_live(&self) -> Vec<usize> {
        (0..self.plan.nodes.len())
            .map(|i| self.network.peak_live_count(NodeId(i)))
            .collect()
    }

    pub fn capacity_respected(&self) -> bool {
        self.plan
            .nodes
            .iter()
            .all(|n| self.network.peak_live_count(n.id) <= n.register_capacity)
    }

    pub fn peak_support(&self) -> usize {
        self.network.state().peak_support()
    }

    pub fn reset_peak_support(&mut self) {
        self.network.state_mut().reset_peak_support();
    }

    /// Measures a logical qubit in place using `rng` instead of the network's
    /// own source.
    pub fn measure_with(&mut self, q: Qubit, rng: &mut RandomSource) -> Result<bool> {
        self.check_logical(q)?;
        let p = self.loc[q.0];
        self.fresh[q.0] = false;
        self.network.state_mut().measure(p, rng)
    }

    /// Loads the logical basis state `index`, which must be the first write.
    pub fn load_basis(&mut self, index: BasisIndex) -> Result<()> {
        if self.network.state().support() != 1 || self.network.state().amplitude(0).norm() < 0.5 {
            return Err(Error::Precondition("basis input must be loaded first".into()));
        }
        let n = self.plan.num_logical();
        if n < 128 && index >> n != 0 {
            return Err(Error::QubitOutOfRange {
                qubit: 127 - index.leading_zeros() as usize,
                allocated: n,
            });
        }
        for l in 0..n {
            if (index >> l) & 1 == 1 {
                let p = self.loc[l];
                self.network.state_mut().apply_gate(GateKind::X, &[p], &[])?;
                self.fresh[l] = false;
            }
        }
        Ok(())
    }

    fn node_of_logical(&self, l: usize) -> NodeId {
        self.network.node_of(self.loc[l]).expect("tracked qubit")
    }

    fn home_node(&self, l: usize) -> NodeId {
        self.plan.roles[l].node
    }

    fn exec_node(&self, instr: &Instruction) -> Result<NodeId> {
        if let Some(anchor) = instr.anchor {
            return Ok(self.plan.home(anchor)?.node);
        }
        let first = instr
            .qubits()
            .first()
            .copied()
            .ok_or_else(|| Error::Precondition("instruction without qubits".into()))?;
        self.check_logical(first)?;
        Ok(self.node_of_logical(first.0))
    }

    fn check_logical(&self, q: Qubit) -> Result<()> {
        if q.0 >= self.loc.len() {
            return Err(Error::Placement(format!("logical qubit {q} is not in the plan")));
        }
        Ok(())
    }

    fn is_cross_node_swap(&self, instr: &Instruction) -> Result<bool> {
        Ok(match &instr.op {
            Operation::Gate {
                kind: GateKind::Swap,
                targets,
                controls,
            } if controls.is_empty() => {
                self.check_logical(targets[0])?;
                self.check_logical(targets[1])?;
                self.node_of_logical(targets[0].0) != self.node_of_logical(targets[1].0)
            }
            _ => false,
        })
    }

    /// Runs a logical circuit and returns its measurement outcomes in order.
    pub fn execute(&mut self, circuit: &Circuit) -> Result<Vec<bool>> {
        if circuit.num_qubits() > self.plan.num_logical() {
            return Err(Error::Placement(format!(
                "circuit uses {} qubits, plan places {}",
                circuit.num_qubits(),
                self.plan.num_logical()
            )));
        }
        if self.bits.len() < circuit.num_classical_bits() {
            self.bits.resize(circuit.num_classical_bits(), None);
        }
        let instrs = circuit.instructions();
        let mut transcript = Vec::new();
        let mut i = 0;
        while i < instrs.len() {
            let instr = &instrs[i];
            match &instr.op {
                Operation::Measure { qubit, bit } => {
                    self.check_logical(*qubit)?;
                    let outcome = self.network.measure_local(self.loc[qubit.0])?;
                    self.fresh[qubit.0] = false;
                    self.bits[*bit] = Some(outcome);
                    transcript.push(outcome);
                    i += 1;
                    continue;
                }
                Operation::ResetToZero { qubit, bit } => {
                    self.check_logical(*qubit)?;
                    if self.bits[*bit].ok_or(Error::UnwrittenBit(*bit))? {
                        let p = self.loc[qubit.0];
                        self.network.apply_local(GateKind::X, &[p], &[])?;
                    }
                    i += 1;
                    continue;
                }
                Operation::Gate { .. } => {}
            }
            if self.is_cross_node_swap(instr)? {
                self.exchange(instr)?;
                i += 1;
                continue;
            }
            let exec = self.exec_node(instr)?;
            let mut label: Option<&str> = (!instr.fused).then_some(&*instr.label);
            let mut j = i + 1;
            while j < instrs.len() {
                let next = &instrs[j];
                if !next.is_gate() || self.is_cross_node_swap(next)? || self.exec_node(next)? != exec {
                    break;
                }
                match label {
                    _ if next.fused => {}
                    None => label = Some(&next.label),
                    Some(l) if l == &*next.label => {}
                    Some(_) => break,
                }
                j += 1;
            }
            let label = label.unwrap_or(&instr.label).to_string();
            self.run_block(&instrs[i..j], exec, &label)?;
            i = j;
        }
        Ok(transcript)
    }

    fn gate_parts(instr: &Instruction) -> (&GateKind, &[Qubit], &[Control]) {
        match &instr.op {
            Operation::Gate {
                kind,
                targets,
                controls,
            } => (kind, targets, controls),
            _ => unreachable!("blocks contain gates only"),
        }
    }

    fn run_block(&mut self, block: &[Instruction], exec: NodeId, label: &str) -> Result<()> {
        // Qubits that must sit on the execution node, in first-use order.
        let mut local: Vec<usize> = Vec::new();
        let mut remote: Vec<usize> = Vec::new();
        for instr in block {
            let (_, targets, _) = Self::gate_parts(instr);
            for t in targets {
                if !local.contains(&t.0) {
                    local.push(t.0);
                }
            }
        }
        for instr in block {
            let (_, _, controls) = Self::gate_parts(instr);
            for c in controls {
                let l = c.qubit.0;
                if local.contains(&l) || remote.contains(&l) {
                    continue;
                }
                if self.home_node(l) == exec || self.node_of_logical(l) == exec {
                    local.push(l);
                } else {
                    remote.push(l);
                }
            }
        }
        let channels = self.plan.nodes[exec.0].channel_qubits;
        let crowded = self.guests_needed(&local, exec)? > self.guest_room(&local, exec)?;
        if remote.len() > channels || crowded {
            if block.len() == 1 {
                return Err(if crowded {
                    Error::NoFreeSlot(exec)
                } else {
                    Error::NoFreeChannel(exec)
                });
            }
            let mid = block.len() / 2;
            self.run_block(&block[..mid], exec, label)?;
            return self.run_block(&block[mid..], exec, label);
        }
        for &l in &local {
            self.bring(l, exec, &local, label)?;
        }
        let mut shared: Vec<Shared> = Vec::with_capacity(remote.len());
        for &l in &remote {
            let src = self.node_of_logical(l);
            let pair = self.network.establish_epr(src, exec)?;
            let cat = self.network.cat_entangle(self.loc[l], pair)?;
            self.network.reset_spent(src)?;
            shared.push(Shared { logical: l, cat });
        }
        if !shared.is_empty() {
            self.report.add(
                label,
                NlTEntry {
                    nl: 1,
                    ebits: shared.len() as u64,
                    teleports: 0,
                },
            );
            self.report.max_fan_in = self.report.max_fan_in.max(shared.len());
        }
        let result = self.apply_block(block, &shared);
        for s in shared {
            self.network.cat_disentangle(s.cat)?;
            self.network.reset_spent(s.cat.node_a)?;
        }
        self.network.reset_channels(exec)?;
        result
    }

    /// Local qubits that would arrive on `node` as guests.
    fn guests_needed(&self, local: &[usize], node: NodeId) -> Result<usize> {
        Ok(local
            .iter()
            .filter(|&&l| self.node_of_logical(l) != node && self.home_node(l) != node)
            .count())
    }

    /// Guest slots on `node` that are free or held by a guest outside `keep`.
    fn guest_room(&self, keep: &[usize], node: NodeId) -> Result<usize> {
        let spec = &self.plan.nodes[node.0];
        let mut room = 0;
        for s in 0..spec.data_slots() {
            let q = self.network.data_qubit(node, s)?;
            let usable = match self.occupant.get(&q.0) {
                Some(&g) => self.home_node(g) != node && !keep.contains(&g),
                None => !self.reserved[q.0] && !self.network.is_occupied(q),
            };
            room += usize::from(usable);
        }
        Ok(room)
    }

    fn apply_block(&mut self, block: &[Instruction], shared: &[Shared]) -> Result<()> {
        for instr in block {
            let (kind, targets, controls) = Self::gate_parts(instr);
            for t in targets {
                self.fresh[t.0] = false;
            }
            let fires = match &instr.condition {
                Condition::Always => true,
                Condition::Constant(bit) => *bit,
                Condition::Parity(list) => {
                    let mut acc = false;
                    for &b in list {
                        acc ^= self.bits.get(b).copied().flatten().ok_or(Error::UnwrittenBit(b))?;
                    }
                    acc
                }
            };
            if !fires {
                continue;
            }
            let phys_targets: Vec<Qubit> = targets.iter().map(|t| self.loc[t.0]).collect();
            let phys_controls: Vec<Control> = controls
                .iter()
                .map(|c| {
                    let qubit = shared
                        .iter()
                        .find(|s| s.logical == c.qubit.0)
                        .map_or(self.loc[c.qubit.0], |s| s.cat.mirror);
                    Control {
                        qubit,
                        polarity: c.polarity,
                    }
                })
                .collect();
            self.network.apply_local(*kind, &phys_targets, &phys_controls)?;
        }
        Ok(())
    }

    fn count_teleport(&mut self, label: &str) {
        self.report.add(
            label,
            NlTEntry {
                nl: 0,
                ebits: 0,
                teleports: 1,
            },
        );
    }

    fn move_to(&mut self, l: usize, dest: Qubit, label: &str) -> Result<()> {
        let from = self.loc[l];
        if self.fresh[l] {
            self.network.relocate_zero(from, dest)?;
        } else {
            self.network.teleport_into(from, dest)?;
            self.count_teleport(label);
        }
        self.occupant.remove(&from.0);
        self.occupant.insert(dest.0, l);
        self.loc[l] = dest;
        Ok(())
    }

    /// Brings logical qubit `l` onto `node`, evicting a guest not in `keep`
    /// if the node has no spare slot.
    fn bring(&mut self, l: usize, node: NodeId, keep: &[usize], label: &str) -> Result<()> {
        if self.node_of_logical(l) == node {
            return Ok(());
        }
        let dest = if self.home_node(l) == node {
            self.home_phys[l]
        } else {
            self.guest_slot(node, keep, label)?
        };
        self.move_to(l, dest, label)
    }

    fn guest_slot(&mut self, node: NodeId, keep: &[usize], label: &str) -> Result<Qubit> {
        let spec = &self.plan.nodes[node.0];
        let slots: Vec<Qubit> = (0..spec.data_slots())
            .map(|s| self.network.data_qubit(node, s))
            .collect::<Result<_>>()?;
        if let Some(&free) = slots
            .iter()
            .find(|q| !self.reserved[q.0] && !self.network.is_occupied(**q))
        {
            return Ok(free);
        }
        let evict = slots.iter().find_map(|q| {
            let g = *self.occupant.get(&q.0)?;
            (self.home_node(g) != node && !keep.contains(&g)).then_some((g, *q))
        });
        let Some((guest, slot)) = evict else {
            return Err(Error::NoFreeSlot(node));
        };
        let home = self.home_phys[guest];
        self.move_to(guest, home, label)?;
        Ok(slot)
    }

    /// Uncontrolled SWAP of two qubits on different nodes: each state is
    /// teleported to the other side, so both logical qubits keep their slots.
    fn exchange(&mut self, instr: &Instruction) -> Result<()> {
        let (_, targets, _) = Self::gate_parts(instr);
        let (p, q) = (targets[0].0, targets[1].0);
        let (pa, pb) = (self.loc[p], self.loc[q]);
        let node_b = self.node_of_logical(q);
        let temp = self.guest_slot(node_b, &[p, q], &instr.label)?;
        self.network.teleport_into(pa, temp)?;
        self.network.teleport_into(pb, pa)?;
        self.network.claim(pb)?;
        self.network.apply_local(GateKind::Swap, &[temp, pb], &[])?;
        self.network.release(temp)?;
        self.count_teleport(&instr.label);
        self.count_teleport(&instr.label);
        self.fresh[p] = false;
        self.fresh[q] = false;
        Ok(())
    }

    /// The network state re-expressed over logical qubits. Fails if any
    /// channel or spare slot still carries amplitude.
    pub fn logical_state(&self) -> Result<QuantumState> {
        let mut mask: BasisIndex = 0;
        for p in &self.loc {
            mask |= 1u128 << p.0;
        }
        let mut amps = Vec::with_capacity(self.network.state().support());
        for (idx, amp) in self.network.state().sorted_amplitudes() {
            if idx & !mask != 0 {
                return Err(Error::Precondition(format!(
                    "amplitude left outside logical qubits (basis {idx:#x})"
                )));
            }
            let mut logical: BasisIndex = 0;
            for (l, p) in self.loc.iter().enumerate() {
                logical |= ((idx >> p.0) & 1) << l;
            }
            amps.push((logical, amp));
        }
        QuantumState::from_amplitudes(self.plan.num_logical(), amps)
    }
}
