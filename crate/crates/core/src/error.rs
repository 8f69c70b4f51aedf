use thiserror::Error;

use crate::netsim::NodeId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("qubit {qubit} out of range ({allocated} allocated)")]
    QubitOutOfRange { qubit: usize, allocated: usize },

    #[error("qubit {0} appears more than once in one operation")]
    DuplicateQubit(usize),

    #[error("{gate} acts on {expected} target(s), got {got}")]
    ArityMismatch {
        gate: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("state has zero total probability")]
    ZeroProbability,

    #[error("cannot allocate {0} qubits (limit is 128)")]
    TooManyQubits(usize),

    #[error("amplitudes are not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("classical bit {0} read before being written")]
    UnwrittenBit(usize),

    #[error("circuit is not reversible: {0}")]
    NotReversible(String),

    #[error("gate would carry {0} controls (at most 5 allowed)")]
    TooManyControls(usize),

    #[error("control qubit {0} collides with a qubit already used by the circuit")]
    ControlCollision(usize),

    #[error("no free channel qubit on node {0}")]
    NoFreeChannel(NodeId),

    #[error("no free register slot on node {0}")]
    NoFreeSlot(NodeId),

    #[error("channel qubit {0} is still entangled with live data")]
    ChannelEntangled(usize),

    #[error("EPR pair already consumed")]
    EprConsumed,

    #[error("cat-like state already disentangled")]
    CatConsumed,

    #[error("operation spans nodes {0} and {1} but must be local")]
    NotLocal(NodeId, NodeId),

    #[error("nodes {0} and {1} are not linked")]
    NoLink(NodeId, NodeId),

    #[error("unknown node {0}")]
    UnknownNode(NodeId),

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("placement plan: {0}")]
    Placement(String),

    #[error("{value} does not fit in {width} bits")]
    ConstantTooWide { value: u64, width: usize },

    #[error("register width mismatch: {0}")]
    WidthMismatch(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{a} is not invertible modulo {modulus}")]
    NotCoprime { a: u64, modulus: u64 },

    #[error("unknown gate-count level `{0}`")]
    UnknownLevel(String),

    #[error("sparse support {support} exceeded the bound {bound}")]
    SupportExceeded { support: usize, bound: usize },
}
