//! Counting the edges near each vertex.
//!
//! `E(N^d(v))` is the set of edges with at least one endpoint within
//! distance `d - 1` of `v`, so `E(N^1(v))` is the set of edges at `v` and
//! each extra hop of flooding grows the radius by one.
//!
//! [`neighborhood_edges_exact`] floods edge lists (or an "over threshold"
//! marker) for `d - 1` fixed-length phases. The threshold test and the
//! ladder estimate evaluate the same flooding outcome from precomputed
//! neighborhood bitsets and book the rounds of the flooding phases; their
//! message counts are the all-edges-busy upper bound.

use rand::Rng as _;

use crate::congest::{Backend, Message, Network, Outbox, ID_BITS};
use crate::error::Result;
use crate::graph::{Graph, VertexId};
use crate::rng::Rng;

/// Bits of one edge on the wire.
pub const EDGE_BITS: u64 = 2 * ID_BITS;
const STAR_BITS: u64 = 1;

/// Simple edges of `g` with stable IDs (the order of [`Graph::edges`]) and
/// the IDs incident to each vertex.
#[derive(Clone, Debug)]
pub struct EdgeIndex {
    pub edges: Vec<(VertexId, VertexId)>,
    pub incident: Vec<Vec<usize>>,
}

impl EdgeIndex {
    pub fn new(g: &Graph) -> Self {
        let edges: Vec<_> = g.edges().collect();
        let mut incident = vec![Vec::new(); g.n()];
        for (i, &(u, v)) in edges.iter().enumerate() {
            incident[u].push(i);
            incident[v].push(i);
        }
        EdgeIndex { edges, incident }
    }
}

/// Vertices within `radius` hops of `v`, with the BFS depth capped.
pub fn ball(g: &Graph, v: VertexId, radius: usize) -> Vec<VertexId> {
    let mut seen = vec![false; g.n()];
    seen[v] = true;
    let mut out = vec![v];
    let mut frontier = vec![v];
    for _ in 0..radius {
        let mut next = Vec::new();
        for &u in &frontier {
            for &w in g.neighbors(u) {
                if !seen[w] {
                    seen[w] = true;
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        out.extend(&next);
        frontier = next;
    }
    out
}

/// `E(N^d(v))` for every `v`, as bitsets over edge IDs.
#[derive(Clone, Debug)]
pub struct NeighborhoodSets {
    words: usize,
    bits: Vec<u64>,
}

impl NeighborhoodSets {
    pub fn new(g: &Graph, index: &EdgeIndex, d: usize) -> Self {
        let words = index.edges.len().div_ceil(64).max(1);
        let mut bits = vec![0u64; g.n() * words];
        if d > 0 {
            for v in 0..g.n() {
                let row = &mut bits[v * words..(v + 1) * words];
                for u in ball(g, v, d - 1) {
                    for &e in &index.incident[u] {
                        row[e / 64] |= 1 << (e % 64);
                    }
                }
            }
        }
        NeighborhoodSets { words, bits }
    }

    fn row(&self, v: VertexId) -> &[u64] {
        &self.bits[v * self.words..(v + 1) * self.words]
    }

    /// `|E(N^d(v))|`.
    pub fn count(&self, v: VertexId) -> u64 {
        self.row(v).iter().map(|w| w.count_ones() as u64).sum()
    }

    /// `|E(N^d(v)) ∩ sample|` for a sample given as a bitset.
    pub fn count_in(&self, v: VertexId, sample: &[u64]) -> u64 {
        self.row(v).iter().zip(sample).map(|(a, b)| (a & b).count_ones() as u64).sum()
    }

    pub fn edge_ids(&self, v: VertexId) -> Vec<usize> {
        let mut out = Vec::new();
        for (i, &w) in self.row(v).iter().enumerate() {
            let mut w = w;
            while w != 0 {
                out.push(i * 64 + w.trailing_zeros() as usize);
                w &= w - 1;
            }
        }
        out
    }
}

/// What a vertex learned about `E(N^d(v)) ∩ E*`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NeighborhoodEdges {
    /// The full list, sorted.
    Edges(Vec<(VertexId, VertexId)>),
    /// The set has more than `τ` edges.
    OverThreshold,
}

/// Rounds in one flooding phase carrying lists of at most `τ` edges.
fn phase_rounds(net: &Network, tau: u64) -> u64 {
    let per_round = (net.bandwidth_bits() / EDGE_BITS).max(1);
    tau.div_ceil(per_round).max(1)
}

#[derive(Clone, Debug)]
enum Flood {
    Chunk(Vec<usize>),
    Star,
}

impl Message for Flood {
    fn bits(&self) -> u64 {
        match self {
            Flood::Chunk(c) => c.len() as u64 * EDGE_BITS,
            Flood::Star => STAR_BITS,
        }
    }
}

/// Every vertex learns `E(N^d(v)) ∩ E*` if it has at most `τ` edges, and
/// otherwise learns that it is over the threshold.
///
/// `estar[i]` tells whether edge `i` (in [`Graph::edges`] order) is in
/// `E*`. The run has `d - 1` phases of `⌈τ / (B / 64)⌉` rounds each; in a
/// phase, every vertex either streams its current list to all neighbors or
/// sends a single marker, and then merges what it received.
pub fn neighborhood_edges_exact(
    net: &mut Network,
    g: &Graph,
    estar: &[bool],
    d: usize,
    tau: u64,
) -> Result<Vec<NeighborhoodEdges>> {
    let index = EdgeIndex::new(g);
    let mut lists: Vec<Option<Vec<usize>>> = (0..g.n())
        .map(|v| {
            let own: Vec<usize> = index.incident[v].iter().copied().filter(|&e| estar[e]).collect();
            (own.len() as u64 <= tau).then_some(own)
        })
        .collect();
    for l in lists.iter_mut().flatten() {
        l.sort_unstable();
    }
    let rounds = phase_rounds(net, tau);
    let per_round = (net.bandwidth_bits() / EDGE_BITS).max(1) as usize;
    net.phase("flood", |net| -> Result<()> {
        for _ in 1..d {
            let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); g.n()];
            let mut starred = vec![false; g.n()];
            match net.backend() {
                Backend::Simulated => {
                    let mut slots = vec![(); g.n()];
                    for r in 0..rounds as usize {
                        let active: Vec<VertexId> = (0..g.n())
                            .filter(|&v| match &lists[v] {
                                Some(l) => l.len() > r * per_round,
                                None => r == 0,
                            })
                            .collect();
                        net.round(
                            g,
                            &mut slots,
                            &active,
                            |v, _, out: &mut Outbox<Flood>| {
                                let msg = match &lists[v] {
                                    Some(l) => Flood::Chunk(l[r * per_round..l.len().min((r + 1) * per_round)].to_vec()),
                                    None => Flood::Star,
                                };
                                for &w in g.neighbors(v) {
                                    out.send(w, msg.clone());
                                }
                            },
                            |v, _, _, msg| match msg {
                                Flood::Chunk(c) => incoming[v].extend(c),
                                Flood::Star => starred[v] = true,
                            },
                        )?;
                    }
                }
                Backend::Charged => {
                    let (mut messages, mut bits) = (0u64, 0u64);
                    for v in 0..g.n() {
                        let deg = g.simple_degree(v);
                        match &lists[v] {
                            Some(l) => {
                                if !l.is_empty() {
                                    messages += deg * l.len().div_ceil(per_round) as u64;
                                    bits = bits.max(l.len().min(per_round) as u64 * EDGE_BITS);
                                }
                                for &w in g.neighbors(v) {
                                    incoming[w].extend(l);
                                }
                            }
                            None => {
                                messages += deg;
                                bits = bits.max(STAR_BITS);
                                for &w in g.neighbors(v) {
                                    starred[w] = true;
                                }
                            }
                        }
                    }
                    net.charge(rounds, messages, bits)?;
                }
            }
            for v in 0..g.n() {
                if starred[v] {
                    lists[v] = None;
                }
                if let Some(l) = &mut lists[v] {
                    l.append(&mut incoming[v]);
                    l.sort_unstable();
                    l.dedup();
                    if l.len() as u64 > tau {
                        lists[v] = None;
                    }
                }
            }
        }
        Ok(())
    })?;
    Ok(lists
        .into_iter()
        .map(|l| match l {
            Some(l) => NeighborhoodEdges::Edges(l.into_iter().map(|e| index.edges[e]).collect()),
            None => NeighborhoodEdges::OverThreshold,
        })
        .collect())
}

/// Constants of the neighborhood-counting procedures.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct CountingParams {
    /// The large constant `K`.
    pub k: f64,
    /// Relative accuracy `f`.
    pub f: f64,
    /// `log₂ n` used in the sampling rate.
    pub log_n: f64,
}

/// Books one threshold test: `d - 1` flooding phases with lists of at most
/// `τ` edges, every edge busy in every round.
fn charge_test(net: &mut Network, g: &Graph, d: usize, tau: f64) -> Result<()> {
    if d <= 1 {
        return Ok(());
    }
    let rounds = (d as u64 - 1) * phase_rounds(net, tau.floor() as u64);
    let per_round = (net.bandwidth_bits() / EDGE_BITS).max(1);
    let bits = if g.m() > 0 { per_round.min(tau.floor().max(1.0) as u64) * EDGE_BITS } else { 0 };
    net.charge(rounds, rounds * 2 * g.m() as u64, bits)
}

/// Edge sample for one threshold test, or `None` when the test is exact.
fn draw_sample(index: &EdgeIndex, z: f64, p: &CountingParams, rng: &mut Rng) -> Option<Vec<u64>> {
    let kl = p.k * p.log_n;
    if kl >= p.f * p.f * z {
        return None;
    }
    let q = kl / (p.f * p.f * z);
    let mut bits = vec![0u64; index.edges.len().div_ceil(64).max(1)];
    for e in 0..index.edges.len() {
        if rng.random::<f64>() < q {
            bits[e / 64] |= 1 << (e % 64);
        }
    }
    Some(bits)
}

/// Outcome of one threshold test evaluated on precomputed sets.
fn test_outputs(sets: &NeighborhoodSets, n: usize, z: f64, sample: Option<&[u64]>, p: &CountingParams) -> (Vec<bool>, f64) {
    match sample {
        None => {
            let tau = (1.0 + p.f) * z;
            ((0..n).map(|v| sets.count(v) as f64 <= tau).collect(), tau)
        }
        Some(s) => {
            let tau = (1.0 + p.f / 2.0) * p.k * p.log_n / (p.f * p.f);
            ((0..n).map(|v| sets.count_in(v, s) as f64 <= tau).collect(), tau)
        }
    }
}

/// Per-vertex bit: 1 (true) when `|E(N^d(v))| ≤ z`, 0 when it is at least
/// `(1+f)z`, each with high probability.
///
/// When `K log n ≥ f² z` the exact flooding with `τ = (1+f)z` decides.
/// Otherwise every edge is sampled with probability `K log n / (f² z)` and
/// the sampled count is compared with `(1+f/2) K log n / f²`.
pub fn neighborhood_threshold_test(
    net: &mut Network,
    g: &Graph,
    d: usize,
    z: f64,
    p: &CountingParams,
    rng: &mut Rng,
) -> Result<Vec<bool>> {
    let index = EdgeIndex::new(g);
    let sets = NeighborhoodSets::new(g, &index, d);
    let sample = draw_sample(&index, z, p, rng);
    let (out, tau) = test_outputs(&sets, g.n(), z, sample.as_deref(), p);
    net.phase("threshold", |net| charge_test(net, g, d, tau))?;
    Ok(out)
}

/// The ladder `1, (1+f), (1+f)², ...` up to `C(n, 2)`.
pub fn ladder(n: usize, f: f64) -> Vec<f64> {
    let top = (n as f64 * (n as f64 - 1.0) / 2.0).max(1.0);
    let mut out = vec![1.0];
    loop {
        let next = out.last().expect("non-empty") * (1.0 + f);
        if next > top {
            return out;
        }
        out.push(next);
    }
}

/// Estimates `m_v` of `|E(N^d(v))|` for each radius in `radii`.
///
/// Runs the threshold test for every ladder value `z` and takes the
/// smallest `z` whose test returned 1. The edge samples of a ladder level
/// are shared by all radii, so the estimates are non-decreasing in `d` on
/// every run. `n_ladder` sets the top of the ladder.
pub fn neighborhood_size_estimate(
    net: &mut Network,
    g: &Graph,
    radii: &[usize],
    p: &CountingParams,
    n_ladder: usize,
    rng: &mut Rng,
) -> Result<Vec<Vec<f64>>> {
    let index = EdgeIndex::new(g);
    let sets: Vec<NeighborhoodSets> = radii.iter().map(|&d| NeighborhoodSets::new(g, &index, d)).collect();
    let steps = ladder(n_ladder.max(2), p.f);
    let mut est: Vec<Vec<Option<f64>>> = vec![vec![None; g.n()]; radii.len()];
    net.phase("estimate", |net| -> Result<()> {
        for &z in &steps {
            let sample = draw_sample(&index, z, p, rng);
            for (r, set) in sets.iter().enumerate() {
                let pending = est[r].iter().any(Option::is_none);
                let tau = if pending {
                    let (out, tau) = test_outputs(set, g.n(), z, sample.as_deref(), p);
                    for (v, ok) in out.into_iter().enumerate() {
                        if ok && est[r][v].is_none() {
                            est[r][v] = Some(z);
                        }
                    }
                    tau
                } else {
                    test_outputs(set, 0, z, sample.as_deref(), p).1
                };
                charge_test(net, g, radii[r], tau)?;
            }
        }
        Ok(())
    })?;
    let top = *steps.last().expect("non-empty");
    Ok(est.into_iter().map(|row| row.into_iter().map(|x| x.unwrap_or(top)).collect()).collect())
}
