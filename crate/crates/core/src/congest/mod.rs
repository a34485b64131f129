//! A synchronous message-passing simulator with per-edge bandwidth limits.
//!
//! A [`Network`] owns the clock, the bandwidth budget and a [`RoundLedger`].
//! Protocols drive it one round at a time through [`Network::round`]: every
//! active vertex first fills an [`Outbox`] from its own state, the simulator
//! checks the budget on each directed edge, and only then are all messages
//! handed to their receivers. A vertex therefore never observes a message
//! sent in the same round.
//!
//! The tree primitives in [`tree`] come in two interchangeable backends. The
//! simulated one routes every message through [`Network::round`]; the charged
//! one computes the same result centrally and books exactly the rounds,
//! messages and widths the simulated run would have produced. Tests pin the
//! two against each other.

mod ledger;
pub mod sampling;
pub mod search;
pub mod tree;

pub use ledger::{PhaseStats, RoundLedger};
pub use sampling::sample_by_degree;
pub use search::{random_binary_search, SearchOutcome};
pub use tree::{bfs_tree, Tree};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};

/// Encoded width of a vertex identifier.
pub const ID_BITS: u64 = 32;
/// Encoded width of a counter or volume.
pub const COUNT_BITS: u64 = 64;
/// Default multiplier `c` in the bandwidth `c * max(ceil(log2 n), 8)`.
pub const DEFAULT_BANDWIDTH_FACTOR: u64 = 32;

/// A payload with a fixed, documented encoded width.
pub trait Message {
    /// Bits this message occupies on the wire.
    fn bits(&self) -> u64;
}

impl Message for u64 {
    fn bits(&self) -> u64 {
        COUNT_BITS
    }
}

impl<const N: usize> Message for [u64; N] {
    fn bits(&self) -> u64 {
        COUNT_BITS * N as u64
    }
}

impl Message for () {
    fn bits(&self) -> u64 {
        1
    }
}

/// How the tree primitives are executed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Every message goes through the round engine.
    #[default]
    Simulated,
    /// Results are computed centrally and the identical cost is booked.
    Charged,
}

/// Messages queued by one vertex during one round.
#[derive(Debug)]
pub struct Outbox<M> {
    sends: Vec<(VertexId, M)>,
}

impl<M> Outbox<M> {
    fn new() -> Self {
        Outbox { sends: Vec::new() }
    }

    /// Queues `msg` for neighbor `to`.
    pub fn send(&mut self, to: VertexId, msg: M) {
        self.sends.push((to, msg));
    }
}

/// What one call to [`Network::round`] put on the wire.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RoundStats {
    pub messages: u64,
    pub max_bits: u64,
}

/// Simulator clock, bandwidth budget and cost ledger.
#[derive(Clone, Debug)]
pub struct Network {
    bandwidth_bits: u64,
    backend: Backend,
    round: u64,
    ledger: RoundLedger,
    phases: Vec<String>,
}

/// Bandwidth `c * max(ceil(log2 n), 8)` bits per directed edge per round.
pub fn bandwidth_for(n: usize, c: u64) -> u64 {
    c * ceil_log2(n as u64).max(8)
}

pub(crate) fn ceil_log2(x: u64) -> u64 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros() as u64
    }
}

impl Network {
    /// A network with an explicit per-edge budget.
    pub fn new(bandwidth_bits: u64) -> Self {
        Network {
            bandwidth_bits,
            backend: Backend::default(),
            round: 0,
            ledger: RoundLedger::new(),
            phases: Vec::new(),
        }
    }

    /// A network sized for `g` with the default bandwidth factor.
    pub fn for_graph(g: &Graph) -> Self {
        Network::new(bandwidth_for(g.n(), DEFAULT_BANDWIDTH_FACTOR))
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    /// A fresh network with the same budget and backend and an empty ledger.
    pub fn fork(&self) -> Self {
        Network::new(self.bandwidth_bits).with_backend(self.backend)
    }

    pub fn bandwidth_bits(&self) -> u64 {
        self.bandwidth_bits
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn set_backend(&mut self, backend: Backend) {
        self.backend = backend;
    }

    /// Rounds elapsed so far.
    pub fn round_index(&self) -> u64 {
        self.round
    }

    pub fn ledger(&self) -> &RoundLedger {
        &self.ledger
    }

    pub fn into_ledger(self) -> RoundLedger {
        self.ledger
    }

    /// Label that new rounds are booked under: the phase stack joined by `/`.
    pub fn current_phase(&self) -> String {
        if self.phases.is_empty() {
            "main".to_string()
        } else {
            self.phases.join("/")
        }
    }

    /// Runs `f` with `name` pushed on the phase stack.
    pub fn phase<R>(&mut self, name: &str, f: impl FnOnce(&mut Network) -> R) -> R {
        self.phases.push(name.to_string());
        let out = f(self);
        self.phases.pop();
        out
    }

    /// Books `rounds` rounds carrying `messages` messages of at most
    /// `max_bits` bits without simulating them.
    pub fn charge(&mut self, rounds: u64, messages: u64, max_bits: u64) -> Result<()> {
        if max_bits > self.bandwidth_bits {
            return Err(Error::BandwidthExceeded { from: 0, to: 0, bits: max_bits, budget: self.bandwidth_bits });
        }
        if rounds == 0 && messages == 0 {
            return Ok(());
        }
        self.round += rounds;
        let phase = self.current_phase();
        self.ledger.record(&phase, rounds, messages, max_bits);
        Ok(())
    }

    /// Merges a ledger produced on a forked network, prefixing its phases
    /// with the current phase path.
    pub fn absorb_parallel(&mut self, ledgers: &[RoundLedger], round_factor: u64) {
        let prefix = self.current_phase();
        let renamed: Vec<RoundLedger> = ledgers
            .iter()
            .map(|l| {
                let mut r = RoundLedger::new();
                for p in l.phases() {
                    r.record(&format!("{prefix}/{}", p.phase), p.rounds, p.messages, p.max_bits);
                }
                r
            })
            .collect();
        let before = self.ledger.total().rounds;
        self.ledger.absorb_parallel(&renamed, round_factor);
        self.round += self.ledger.total().rounds - before;
    }

    /// Executes one synchronous round.
    ///
    /// `send` runs for each vertex of `active` in ascending order and may
    /// only queue messages to neighbors in `g`. After every sender has run,
    /// each message is handed to `receive` in (receiver, sender) order. The
    /// per-directed-edge sum of message widths must fit the budget.
    pub fn round<S, M, F, R>(
        &mut self,
        g: &Graph,
        states: &mut [S],
        active: &[VertexId],
        mut send: F,
        mut receive: R,
    ) -> Result<RoundStats>
    where
        M: Message,
        F: FnMut(VertexId, &mut S, &mut Outbox<M>),
        R: FnMut(VertexId, &mut S, VertexId, M),
    {
        let mut order = active.to_vec();
        order.sort_unstable();
        order.dedup();
        let mut wire: Vec<(VertexId, VertexId, M)> = Vec::new();
        let mut stats = RoundStats::default();
        let mut outbox = Outbox::new();
        for &v in &order {
            send(v, &mut states[v], &mut outbox);
            outbox.sends.sort_by_key(|(to, _)| *to);
            let mut i = 0;
            while i < outbox.sends.len() {
                let to = outbox.sends[i].0;
                if !g.has_edge(v, to) {
                    return Err(Error::NotANeighbor { from: v, to });
                }
                let mut bits = 0;
                let mut j = i;
                while j < outbox.sends.len() && outbox.sends[j].0 == to {
                    bits += outbox.sends[j].1.bits();
                    j += 1;
                }
                if bits > self.bandwidth_bits {
                    return Err(Error::BandwidthExceeded { from: v, to, bits, budget: self.bandwidth_bits });
                }
                stats.max_bits = stats.max_bits.max(bits);
                i = j;
            }
            stats.messages += outbox.sends.len() as u64;
            wire.extend(outbox.sends.drain(..).map(|(to, m)| (to, v, m)));
        }
        wire.sort_by_key(|&(to, from, _)| (to, from));
        for (to, from, msg) in wire {
            receive(to, &mut states[to], from, msg);
        }
        self.round += 1;
        let phase = self.current_phase();
        self.ledger.record(&phase, 1, stats.messages, stats.max_bits);
        Ok(stats)
    }
}
