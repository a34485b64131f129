//! RandomNibble, ParallelNibble and Partition.
//!
//! These run on a working graph `G{W}` (a [`Subgraph`] of the host network
//! with degree-preserving loops) but coordinate over a BFS tree of the host
//! component: start vertices are sampled down that tree, and the instance
//! selection in ParallelNibble is a search over it.

use std::collections::BTreeMap;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::nibble::{approximate_nibble, NibbleRun};
use super::{CutConfig, Host};
use crate::congest::tree::{broadcast, tree_sum, Opaque};
use crate::congest::{random_binary_search, sample_by_degree, Message, Network, RoundLedger, COUNT_BITS, ID_BITS};
use crate::error::Result;
use crate::graph::{Subgraph, VertexId};
use crate::rng::{seeded, Rng};
use crate::walks::{derive_nibble_params_with, NibbleParams};

/// Draws `b ∈ 1..=ℓ` with `Pr[b = i] = 2^-i / (1 - 2^-ℓ)`.
pub fn sample_b(rng: &mut Rng, ell: u32) -> u32 {
    let norm = 1.0 - 0.5f64.powi(ell as i32);
    let u: f64 = rng.random::<f64>() * norm;
    let mut acc = 0.0;
    for i in 1..=ell {
        acc += 0.5f64.powi(i as i32);
        if u < acc {
            return i;
        }
    }
    ell
}

/// Degree of every host vertex inside the working graph, zero elsewhere.
fn host_weights(host: &Host<'_>, work: &Subgraph) -> Vec<u64> {
    let mut w = vec![0; host.graph.n()];
    for (local, &global) in work.ids.iter().enumerate() {
        w[global] = work.graph.degree(local);
    }
    w
}

/// One RandomNibble instance.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomNibbleOutcome {
    /// Start vertex, as a local ID of the working graph.
    pub start: VertexId,
    pub b: u32,
    pub run: NibbleRun,
}

/// Samples `v` proportional to degree and `b` from the truncated geometric
/// law, then runs ApproximateNibble from `v`. Returns `None` only when the
/// working graph has no volume.
pub fn random_nibble(
    net: &mut Network,
    host: &Host<'_>,
    work: &Subgraph,
    params: &NibbleParams,
    rng: &mut Rng,
) -> Result<Option<RandomNibbleOutcome>> {
    let b = sample_b(rng, params.ell);
    let mut counts = vec![0u64; params.ell as usize];
    counts[b as usize - 1] = 1;
    let weights = host_weights(host, work);
    let tokens = net.phase("sample", |net| sample_by_degree(net, host.graph, &host.tree, &weights, &counts, rng))?;
    let Some(&(global, _)) = tokens.first() else {
        return Ok(None);
    };
    let start = work.local(global).expect("tokens land on positive-weight vertices");
    let run = net.phase("nibble", |net| approximate_nibble(net, &work.graph, start, b, params, rng))?;
    Ok(Some(RandomNibbleOutcome { start, b, run }))
}

/// Instance count, overlap limit and iteration budget for one
/// ParallelNibble call on a working graph.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParallelNibbleParams {
    /// Number of RandomNibble instances.
    pub k: u64,
    /// Largest number of instances an edge may serve.
    pub w: u64,
    /// Volume of the working graph; the selection keeps `Vol(U) ≤ (23/24)`
    /// of it.
    pub volume: u64,
    /// Partition's participation bound.
    pub g: f64,
    /// Partition's iteration cap after any configured clamp.
    pub s: u64,
}

impl ParallelNibbleParams {
    /// `k = ⌈Vol / (c_k ℓ (t₀+1) t₀ L / φ)⌉`, `w = 10⌈ln Vol⌉`,
    /// `g = 10 w c_k ℓ (t₀+1) t₀ L / φ` and `s = 4 g ⌈log_{7/4}(1/p)⌉`.
    pub fn derive(volume: u64, params: &NibbleParams, cfg: &CutConfig, p: f64) -> Self {
        let t0 = params.t0 as f64;
        let load = cfg.instance_constant * params.ell as f64 * (t0 + 1.0) * t0 * params.log_term() / params.phi;
        let mut k = ((volume as f64 / load).ceil() as u64).max(1);
        if let Some(cap) = cfg.max_instances {
            k = k.min(cap.max(1));
        }
        let w = 10 * ((volume.max(1) as f64).ln().ceil() as u64).max(1);
        let g = 10.0 * w as f64 * load;
        let rounds = ((1.0 / p).ln() / (7.0f64 / 4.0).ln()).ceil().max(1.0);
        let mut s = (4.0 * g.ceil() * rounds).min(u64::MAX as f64) as u64;
        if let Some(cap) = cfg.max_iterations {
            s = s.min(cap);
        }
        ParallelNibbleParams { k, w, volume, g, s: s.max(1) }
    }

    /// Whether `vol` stays within `(23/24)·Vol`.
    pub fn within_z(&self, vol: u64) -> bool {
        24 * vol as u128 <= 23 * self.volume as u128
    }
}

/// What one instance of ParallelNibble did.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    /// Start vertex, local to the working graph.
    pub start: VertexId,
    pub b: u32,
    /// Random ordering identifier.
    pub id: u64,
    /// Members of the cut it found, local IDs.
    pub cut: Vec<VertexId>,
    pub steps: usize,
    /// Number of participating edges.
    pub participants: usize,
}

/// Result of [`parallel_nibble`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParallelOutcome {
    /// `U_{i*}` in local IDs; empty when nothing was found or on overflow.
    pub cut: Vec<VertexId>,
    /// Instances in selection order (by identifier).
    pub instances: Vec<InstanceSummary>,
    /// Number of instances merged into the cut.
    pub selected: usize,
    /// Largest number of instances sharing one edge.
    pub max_participation: u64,
    /// Whether some edge exceeded `w` and the call gave up.
    pub overflow: bool,
}

/// Per-instance ordering key: random identifier, then start, then `b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct InstanceKey {
    id: u64,
    start: VertexId,
    b: u32,
}

impl Message for InstanceKey {
    fn bits(&self) -> u64 {
        COUNT_BITS + 2 * ID_BITS
    }
}

/// Runs `k` RandomNibble instances side by side and merges their cuts.
///
/// Instances are independent, so they run on forked networks; their
/// ledgers are merged phase by phase, with rounds stretched by the largest
/// number of instances that had to share an edge. If that number exceeds
/// `w`, a give-up message is broadcast over the host tree and the result is
/// empty. Otherwise the instances are ordered by their identifiers and the
/// longest prefix whose union stays within `(23/24)·Vol` is returned; the
/// cut-off is found by a random binary search over the host tree.
pub fn parallel_nibble(
    net: &mut Network,
    host: &Host<'_>,
    work: &Subgraph,
    params: &NibbleParams,
    pp: &ParallelNibbleParams,
    rng: &mut Rng,
) -> Result<ParallelOutcome> {
    let g = &work.graph;
    let mut counts = vec![0u64; params.ell as usize];
    for _ in 0..pp.k {
        counts[sample_b(rng, params.ell) as usize - 1] += 1;
    }
    let weights = host_weights(host, work);
    let tokens = net.phase("sample", |net| sample_by_degree(net, host.graph, &host.tree, &weights, &counts, rng))?;
    let seeds: Vec<u64> = tokens.iter().map(|_| rng.random()).collect();

    let runs: Vec<Result<(InstanceKey, NibbleRun, RoundLedger)>> = tokens
        .par_iter()
        .zip(&seeds)
        .map(|(&(global, kind), &seed)| {
            let start = work.local(global).expect("tokens land on positive-weight vertices");
            let b = kind as u32 + 1;
            let mut irng = seeded(seed);
            let id: u64 = irng.random();
            let mut inet = net.fork();
            let run = approximate_nibble(&mut inet, g, start, b, params, &mut irng)?;
            Ok((InstanceKey { id, start, b }, run, inet.into_ledger()))
        })
        .collect();
    let mut runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    runs.sort_by_key(|r| r.0);

    let mut load: BTreeMap<(VertexId, VertexId), u64> = BTreeMap::new();
    for (_, run, _) in &runs {
        for &e in &run.participants {
            *load.entry(e).or_default() += 1;
        }
    }
    let max_participation = load.values().copied().max().unwrap_or(0);
    let ledgers: Vec<RoundLedger> = runs.iter().map(|r| r.2.clone()).collect();
    net.phase("instances", |net| net.absorb_parallel(&ledgers, max_participation.max(1)));

    let instances: Vec<InstanceSummary> = runs
        .iter()
        .map(|(key, run, _)| InstanceSummary {
            start: key.start,
            b: key.b,
            id: key.id,
            cut: run.hit.as_ref().map(|c| c.members.clone()).unwrap_or_default(),
            steps: run.steps,
            participants: run.participants.len(),
        })
        .collect();

    if max_participation > pp.w {
        net.phase("overflow", |net| broadcast(net, host.graph, &host.tree, &Opaque(1)))?;
        return Ok(ParallelOutcome { cut: Vec::new(), instances, selected: 0, max_participation, overflow: true });
    }

    // Each vertex remembers the smallest instance key whose cut contains
    // it; U_i is the set of vertices whose key is at most the i-th key.
    let mut first_key: Vec<Option<InstanceKey>> = vec![None; g.n()];
    for ((key, _, _), inst) in runs.iter().zip(&instances) {
        for &x in &inst.cut {
            first_key[x].get_or_insert(*key);
        }
    }
    let mut elements: Vec<Vec<InstanceKey>> = vec![Vec::new(); host.tree.size()];
    for (key, _, _) in &runs {
        if let Some(pos) = host.tree.position(work.ids[key.start]) {
            elements[pos].push(*key);
        }
    }
    for e in &mut elements {
        e.sort();
    }
    let members = host.tree.members();
    let outcome = net.phase("select", |net| {
        random_binary_search(net, host.graph, &host.tree, &elements, None, rng, |net, key| {
            let values: Vec<[u64; 1]> = members
                .iter()
                .map(|&h| match work.local(h) {
                    Some(x) if first_key[x].is_some_and(|f| f <= *key) => [g.degree(x)],
                    _ => [0],
                })
                .collect();
            let vol = tree_sum(net, host.graph, &host.tree, &values)?[0][0];
            Ok(pp.within_z(vol))
        })
    })?;
    let (cut, selected) = match outcome.boundary {
        None => (Vec::new(), 0),
        Some(last) => {
            let cut = (0..g.n()).filter(|&x| first_key[x].is_some_and(|f| f <= last)).collect();
            (cut, runs.iter().filter(|r| r.0 <= last).count())
        }
    };
    Ok(ParallelOutcome { cut, instances, selected, max_participation, overflow: false })
}

/// Result of [`partition`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionOutcome {
    /// `C = C_1 ∪ ... ∪ C_i`, local IDs of the starting working graph.
    pub cut: Vec<VertexId>,
    /// The non-empty `C_j` in the order they were removed.
    pub parts: Vec<Vec<VertexId>>,
    pub iterations: u64,
    /// Iteration cap `s` that was in force.
    pub cap: u64,
    /// Calls that gave up because of edge overflow.
    pub overflows: u64,
    /// Largest `w` used by any iteration.
    pub w_max: u64,
    /// Largest edge participation seen.
    pub max_participation: u64,
    /// Instances run in total.
    pub instances: u64,
}

/// Partition: repeatedly runs ParallelNibble on `G{W_{i-1}}` and removes
/// what it finds, until `Vol(W_i) ≤ (47/48)·Vol(V)` or `s` iterations.
pub fn partition(
    net: &mut Network,
    host: &Host<'_>,
    work: &Subgraph,
    phi: f64,
    p: f64,
    cfg: &CutConfig,
    rng: &mut Rng,
) -> Result<PartitionOutcome> {
    let total = work.graph.total_volume();
    let first = derive_nibble_params_with(walk_edges(&work.graph).max(1), phi, cfg.profile, cfg.constants)?;
    let cap = ParallelNibbleParams::derive(total, &first, cfg, p).s;
    let mut remaining: Vec<VertexId> = (0..work.graph.n()).collect();
    let mut out = PartitionOutcome {
        cut: Vec::new(),
        parts: Vec::new(),
        iterations: 0,
        cap,
        overflows: 0,
        w_max: 0,
        max_participation: 0,
        instances: 0,
    };
    while out.iterations < cap {
        let inner = work.graph.contract(&remaining);
        let vol = inner.graph.total_volume();
        let m = walk_edges(&inner.graph);
        if vol == 0 || m == 0 {
            break;
        }
        out.iterations += 1;
        let sub = Subgraph { ids: inner.ids.iter().map(|&x| work.ids[x]).collect(), graph: inner.graph };
        let params = derive_nibble_params_with(m, phi, cfg.profile, cfg.constants)?;
        let pp = ParallelNibbleParams::derive(vol, &params, cfg, p);
        let round = net.phase("parallel_nibble", |net| parallel_nibble(net, host, &sub, &params, &pp, rng))?;
        out.w_max = out.w_max.max(pp.w);
        out.max_participation = out.max_participation.max(round.max_participation);
        out.instances += round.instances.len() as u64;
        out.overflows += u64::from(round.overflow);
        if !round.cut.is_empty() {
            let part: Vec<VertexId> = round.cut.iter().map(|&x| inner.ids[x]).collect();
            let mut gone = vec![false; work.graph.n()];
            for &x in &part {
                gone[x] = true;
            }
            remaining.retain(|&x| !gone[x]);
            out.cut.extend(&part);
            out.parts.push(part);
        }
        if 48 * work.graph.volume(&remaining) as u128 <= 47 * total as u128 {
            break;
        }
    }
    out.cut.sort_unstable();
    Ok(out)
}

/// Edge count used for walk parameters on a working graph: simple edges
/// plus self loops.
pub(crate) fn walk_edges(g: &crate::graph::Graph) -> u64 {
    g.m() as u64 + (0..g.n()).map(|v| g.self_loops(v)).sum::<u64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::congest::Backend;
    use crate::generators::{barbell, clique, star};
    use crate::graph::Graph;

    fn whole(g: &Graph) -> Subgraph {
        g.contract(&(0..g.n()).collect::<Vec<_>>())
    }

    #[test]
    fn b_law_matches_truncated_geometric() {
        let mut rng = seeded(11);
        let ell = 5;
        let n = 100_000;
        let mut hist = [0u64; 5];
        for _ in 0..n {
            hist[sample_b(&mut rng, ell) as usize - 1] += 1;
        }
        let norm = 1.0 - 0.5f64.powi(5);
        let chi2: f64 = (1..=5)
            .map(|i| {
                let e = n as f64 * 0.5f64.powi(i) / norm;
                (hist[i as usize - 1] as f64 - e).powi(2) / e
            })
            .sum();
        // 4 degrees of freedom: the 0.99 quantile is 13.28.
        assert!(chi2 < 13.28, "chi2 = {chi2}");
    }

    #[test]
    fn random_nibble_start_follows_degree() {
        let g = star(4);
        let sub = whole(&g);
        let mut net = Network::for_graph(&g).with_backend(Backend::Charged);
        let host = Host::build(&mut net, &g, &(0..g.n()).collect::<Vec<_>>()).unwrap();
        let params = derive_nibble_params_with(4, 0.1, crate::walks::Profile::Desk, crate::walks::WalkConstants::DESK).unwrap();
        let mut rng = seeded(2);
        let trials = 2000;
        let mut center = 0;
        for _ in 0..trials {
            let out = random_nibble(&mut net, &host, &sub, &params, &mut rng).unwrap().unwrap();
            center += usize::from(out.start == 0);
        }
        // Binomial(2000, 1/2): sigma ≈ 22.4.
        assert!((center as f64 - 1000.0).abs() <= 5.0 * 22.4, "{center}");
    }

    #[test]
    fn parallel_nibble_single_instance_is_its_own_cut() {
        let g = barbell(6, 1).unwrap();
        let sub = whole(&g);
        let cfg = CutConfig { max_instances: Some(1), ..CutConfig::default() };
        let params = derive_nibble_params_with(g.m() as u64, 1.0 / 12.0, cfg.profile, cfg.constants).unwrap();
        let pp = ParallelNibbleParams::derive(g.total_volume(), &params, &cfg, 0.25);
        assert_eq!(pp.k, 1);
        for seed in 0..10 {
            let mut net = Network::for_graph(&g);
            let host = Host::build(&mut net, &g, &(0..g.n()).collect::<Vec<_>>()).unwrap();
            let out = parallel_nibble(&mut net, &host, &sub, &params, &pp, &mut seeded(seed)).unwrap();
            assert_eq!(out.instances.len(), 1);
            assert_eq!(out.cut, out.instances[0].cut);
        }
    }

    #[test]
    fn parallel_nibble_respects_z_and_w() {
        let g = barbell(8, 1).unwrap();
        let sub = whole(&g);
        let cfg = CutConfig { max_instances: Some(12), ..CutConfig::default() };
        let params = derive_nibble_params_with(g.m() as u64, 1.0 / 12.0, cfg.profile, cfg.constants).unwrap();
        let pp = ParallelNibbleParams::derive(g.total_volume(), &params, &cfg, 0.25);
        for seed in 0..10 {
            let mut net = Network::for_graph(&g).with_backend(Backend::Charged);
            let host = Host::build(&mut net, &g, &(0..g.n()).collect::<Vec<_>>()).unwrap();
            let out = parallel_nibble(&mut net, &host, &sub, &params, &pp, &mut seeded(seed)).unwrap();
            assert!(pp.within_z(g.volume(&out.cut)));
            if !out.overflow {
                assert!(out.max_participation <= pp.w);
            }
        }
    }

    #[test]
    fn partition_parts_are_disjoint_and_bounded() {
        let g = barbell(10, 1).unwrap();
        let sub = whole(&g);
        let cfg = CutConfig::default();
        for seed in 0..10 {
            let mut net = Network::for_graph(&g).with_backend(Backend::Charged);
            let host = Host::build(&mut net, &g, &(0..g.n()).collect::<Vec<_>>()).unwrap();
            let out = partition(&mut net, &host, &sub, 1.0 / 12.0, 0.25, &cfg, &mut seeded(seed)).unwrap();
            let mut seen = vec![false; g.n()];
            for part in &out.parts {
                for &x in part {
                    assert!(!seen[x]);
                    seen[x] = true;
                }
            }
            assert!(48 * g.volume(&out.cut) <= 47 * g.total_volume());
        }
    }

    #[test]
    fn partition_on_clique_is_usually_empty() {
        let g = clique(10);
        let sub = whole(&g);
        let cfg = CutConfig::default();
        let mut empty = 0;
        for seed in 0..10 {
            let mut net = Network::for_graph(&g).with_backend(Backend::Charged);
            let host = Host::build(&mut net, &g, &(0..g.n()).collect::<Vec<_>>()).unwrap();
            let out = partition(&mut net, &host, &sub, 1.0 / 24.0, 0.25, &cfg, &mut seeded(seed)).unwrap();
            empty += usize::from(out.cut.is_empty());
        }
        assert!(empty >= 9);
    }
}
