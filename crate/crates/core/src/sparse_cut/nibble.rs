//! Nibble and ApproximateNibble.
//!
//! Both scan `t = 1..=t₀` and, at each step, a list of sweep prefixes; the
//! first prefix that passes wins. `nibble` tests every prefix against the
//! plain conditions. `approximate_nibble` only tests the `j_x` candidates
//! and relaxes the conditions on candidates that skipped ahead.
//!
//! A truncated walk whose state repeats will keep cycling through states
//! that were already tested, so both scans stop at the first repeat. The
//! distributed version then books the cost of the remaining steps by
//! replaying the per-step cost of the cycle.

use std::cmp::Ordering;
use std::collections::VecDeque;

use crate::congest::tree::{broadcast, neighbor_exchange, tree_sum};
use crate::congest::{random_binary_search, Message, Network, PhaseStats, ID_BITS};
use crate::error::Result;
use crate::graph::{Graph, VertexId};
use crate::rng::Rng;
use crate::scalar::{Fixed, Scalar};
use crate::walks::{sweep_order, NibbleParams, Sweep, TruncatedWalk};

/// How many past states are compared against the current one. Near the
/// stationary distribution the floored fixed-point shares settle into short
/// cycles, typically of period at most a dozen.
const CYCLE_WINDOW: usize = 64;

/// A sweep prefix that passed the nibble conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepCandidate {
    pub t: usize,
    pub j: usize,
    /// `π̃_t(1..j)` sorted by ID.
    pub members: Vec<VertexId>,
    pub volume: u64,
    pub boundary: u64,
    /// `|∂| / min(vol, Vol(V) - vol)`.
    pub conductance: f64,
    /// `ρ̃_t` of the vertex the density condition was tested on.
    pub rho_at_j: f64,
}

/// The candidate indices `j_1 < j_2 < ...` for one sweep.
///
/// `j_1 = 1` and `j_i = max(j_{i-1} + 1, largest j with Vol(1..j) ≤
/// (1+φ)·Vol(1..j_{i-1}))`, stopping at the last index.
pub fn jx_sequence(sweep: &Sweep, phi: f64) -> Vec<usize> {
    let len = sweep.len();
    if len == 0 {
        return Vec::new();
    }
    let mut seq = vec![1];
    let mut prev = 1;
    while prev < len {
        let bound = (1.0 + phi) * sweep.prefix_volume[prev - 1] as f64;
        let reach = sweep.prefix_volume.partition_point(|&v| v as f64 <= bound);
        prev = reach.max(prev + 1);
        seq.push(prev);
    }
    seq
}

/// The acceptance tests shared by every nibble variant.
#[derive(Clone, Copy, Debug)]
struct Conditions {
    total_volume: u64,
    phi: f64,
    gamma: f64,
    b: u32,
}

impl Conditions {
    fn new(g: &Graph, params: &NibbleParams, b: u32) -> Self {
        Conditions { total_volume: g.total_volume(), phi: params.phi, gamma: params.gamma, b }
    }

    fn large_enough(&self, vol: u64) -> bool {
        7 * vol as u128 >= 5u128 << (self.b - 1)
    }

    fn sparse(&self, vol: u64, boundary: u64, factor: f64) -> bool {
        let small = vol.min(self.total_volume - vol);
        small > 0 && boundary as f64 <= factor * self.phi * small as f64
    }

    fn dense(&self, mass: f64, deg: u64, vol: u64) -> bool {
        mass * vol as f64 >= self.gamma * deg as f64
    }

    /// C.1 to C.3, with the density test at the last prefix vertex.
    fn plain(&self, vol: u64, boundary: u64, mass: f64, deg: u64) -> bool {
        6 * vol as u128 <= 5 * self.total_volume as u128
            && self.large_enough(vol)
            && self.sparse(vol, boundary, 1.0)
            && self.dense(mass, deg, vol)
    }

    /// The relaxed conditions, with the density test at the previous
    /// candidate's last vertex.
    fn relaxed(&self, vol: u64, boundary: u64, prev_mass: f64, prev_deg: u64) -> bool {
        12 * vol as u128 <= 11 * self.total_volume as u128
            && self.large_enough(vol)
            && self.sparse(vol, boundary, 12.0)
            && self.dense(prev_mass, prev_deg, vol)
    }
}

fn candidate<T: Scalar>(g: &Graph, t: usize, sweep: &Sweep, j: usize, mass: &[T], tested: VertexId, tv: u64) -> SweepCandidate {
    let volume = sweep.prefix_volume[j - 1];
    let boundary = sweep.prefix_boundary[j - 1];
    SweepCandidate {
        t,
        j,
        members: sweep.prefix(j),
        volume,
        boundary,
        conductance: boundary as f64 / volume.min(tv - volume).max(1) as f64,
        rho_at_j: mass[tested].as_f64() / g.degree(tested).max(1) as f64,
    }
}

/// Remembers recent walk states to notice when the walk starts cycling.
struct CycleGuard<T, C> {
    recent: VecDeque<(Vec<T>, C)>,
}

impl<T: PartialEq + Clone, C: Clone> CycleGuard<T, C> {
    fn new() -> Self {
        CycleGuard { recent: VecDeque::with_capacity(CYCLE_WINDOW) }
    }

    /// Period of the cycle `mass` closes, with the costs recorded over it
    /// (oldest first).
    fn check(&self, mass: &[T]) -> Option<Vec<C>> {
        let i = self.recent.iter().rposition(|(m, _)| m.as_slice() == mass)?;
        Some(self.recent.iter().skip(i).map(|(_, c)| c.clone()).collect())
    }

    fn push(&mut self, mass: Vec<T>, cost: C) {
        if self.recent.len() == CYCLE_WINDOW {
            self.recent.pop_front();
        }
        self.recent.push_back((mass, cost));
    }
}

/// Centralized Nibble from `v` with truncation `ε_b`: the first `(t, j)`
/// passing C.1 to C.3, if any.
pub fn nibble<T: Scalar>(g: &Graph, v: VertexId, b: u32, params: &NibbleParams) -> Option<SweepCandidate> {
    let cond = Conditions::new(g, params, b);
    let mut walk = TruncatedWalk::<T>::new(g, v, params.eps_b(b));
    let mut guard = CycleGuard::<T, ()>::new();
    guard.push(walk.state().mass.clone(), ());
    for t in 1..=params.t0 as usize {
        walk.step_central();
        let mass = &walk.state().mass;
        if guard.check(mass).is_some() {
            return None;
        }
        let sweep = sweep_order(g, walk.state());
        for j in 1..=sweep.len() {
            let x = sweep.order[j - 1];
            if cond.plain(sweep.prefix_volume[j - 1], sweep.prefix_boundary[j - 1], mass[x].as_f64(), g.degree(x).max(1)) {
                return Some(candidate(g, t, &sweep, j, mass, x, cond.total_volume));
            }
        }
        guard.push(mass.clone(), ());
    }
    None
}

/// Tests the `j_x` candidates of one sweep in order.
fn scan_candidates<T: Scalar>(g: &Graph, cond: &Conditions, t: usize, sweep: &Sweep, mass: &[T]) -> Option<SweepCandidate> {
    let mut prev = 0;
    for j in jx_sequence(sweep, cond.phi) {
        let vol = sweep.prefix_volume[j - 1];
        let bnd = sweep.prefix_boundary[j - 1];
        let tested = if j == prev + 1 { sweep.order[j - 1] } else { sweep.order[prev - 1] };
        let pass = if j == prev + 1 {
            cond.plain(vol, bnd, mass[tested].as_f64(), g.degree(tested).max(1))
        } else {
            cond.relaxed(vol, bnd, mass[tested].as_f64(), g.degree(tested).max(1))
        };
        if pass {
            return Some(candidate(g, t, sweep, j, mass, tested, cond.total_volume));
        }
        prev = j;
    }
    None
}

/// Centralized ApproximateNibble: scans the same `(t, j_x)` schedule as
/// [`approximate_nibble`] and returns the same cut.
pub fn approximate_nibble_reference<T: Scalar>(
    g: &Graph,
    v: VertexId,
    b: u32,
    params: &NibbleParams,
) -> Option<SweepCandidate> {
    let cond = Conditions::new(g, params, b);
    let mut walk = TruncatedWalk::<T>::new(g, v, params.eps_b(b));
    let mut guard = CycleGuard::<T, ()>::new();
    guard.push(walk.state().mass.clone(), ());
    for t in 1..=params.t0 as usize {
        walk.step_central();
        if guard.check(&walk.state().mass).is_some() {
            return None;
        }
        let sweep = sweep_order(g, walk.state());
        if let Some(c) = scan_candidates(g, &cond, t, &sweep, &walk.state().mass) {
            return Some(c);
        }
        guard.push(walk.state().mass.clone(), ());
    }
    None
}

/// What a distributed ApproximateNibble run produced.
#[derive(Clone, Debug, PartialEq)]
pub struct NibbleRun {
    pub hit: Option<SweepCandidate>,
    /// Simple edges that carried or could have carried walk traffic
    /// before the run stopped.
    pub participants: Vec<(VertexId, VertexId)>,
    /// Walk steps actually simulated.
    pub steps: usize,
    /// Length of the state cycle that ended the scan early, if any.
    pub cycle: Option<usize>,
}

/// Position of a vertex in the sweep, as the vertex itself can compute it
/// from its own mass, degree and ID.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct SweepKey {
    mass: Fixed,
    deg: u64,
    id: VertexId,
}

impl Ord for SweepKey {
    fn cmp(&self, other: &Self) -> Ordering {
        Fixed::cmp_ratio(&other.mass, other.deg, &self.mass, self.deg).then(self.id.cmp(&other.id))
    }
}

impl PartialOrd for SweepKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Message for SweepKey {
    fn bits(&self) -> u64 {
        Fixed::BITS + 2 * ID_BITS
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct StepCost {
    rounds: u64,
    messages: u64,
    max_bits: u64,
}

impl StepCost {
    fn since(net: &Network, before: &PhaseStats) -> StepCost {
        let now = net.ledger().total();
        StepCost {
            rounds: now.rounds - before.rounds,
            messages: now.messages - before.messages,
            max_bits: now.max_bits,
        }
    }
}

/// Distributed ApproximateNibble from `v` on `g`.
///
/// Every step runs one walk round, one round in which support vertices tell
/// their neighbors their sweep key, and then a sequence of random binary
/// searches over the walk tree, one per candidate `j_x`. The search for
/// `j_x` evaluates its predicate by summing `(count, volume, boundary)` of
/// the prefix ending at the sampled key up the tree. On a hit the root
/// broadcasts the last key, and every vertex at or before it in the sweep
/// knows it is in the cut.
pub fn approximate_nibble(
    net: &mut Network,
    g: &Graph,
    v: VertexId,
    b: u32,
    params: &NibbleParams,
    rng: &mut Rng,
) -> Result<NibbleRun> {
    let cond = Conditions::new(g, params, b);
    let t0 = params.t0 as usize;
    let mut walk = TruncatedWalk::<Fixed>::new(g, v, params.eps_b(b));
    let mut guard = CycleGuard::<Fixed, StepCost>::new();
    let mut last_cost = StepCost::default();
    let mut run = NibbleRun { hit: None, participants: Vec::new(), steps: 0, cycle: None };

    for t in 1..=t0 {
        let before_walk = net.ledger().total();
        let prev_mass = walk.state().mass.clone();
        net.phase("walk", |net| walk.step(net))?;
        run.steps = t;
        let walk_cost = StepCost::since(net, &before_walk);
        // The state reached at step t-1 is only now known to have been
        // fully processed, together with its cost.
        if t > 1 {
            guard.push(prev_mass, last_cost);
        } else {
            guard.push(prev_mass, StepCost::default());
        }
        if let Some(costs) = guard.check(&walk.state().mass) {
            run.cycle = Some(costs.len());
            replay(net, &costs, walk_cost, t, t0)?;
            break;
        }
        let before_eval = net.ledger().total();
        if let Some(hit) = evaluate_step(net, g, &walk, &cond, t, rng)? {
            run.hit = Some(hit);
            break;
        }
        let eval = StepCost::since(net, &before_eval);
        last_cost = StepCost {
            rounds: walk_cost.rounds + eval.rounds,
            messages: walk_cost.messages + eval.messages,
            max_bits: eval.max_bits,
        };
    }
    run.participants = walk.state().participants(g);
    Ok(run)
}

/// Books steps `t..=t0` of a walk caught in a cycle. `costs[i]` is the full
/// cost of the step that produced the `i`-th state of the cycle; step `t`
/// already paid for its walk round.
fn replay(net: &mut Network, costs: &[StepCost], walk_cost: StepCost, t: usize, t0: usize) -> Result<()> {
    let p = costs.len();
    let (mut rounds, mut messages, mut bits) = (0u64, 0u64, 0u64);
    // Costs are stored per produced state: the state at index i of the
    // cycle was produced by a step whose cost is costs[i]. Step t produced
    // the state equal to index 0, so step t + k costs costs[k mod p].
    let first = costs[0];
    rounds += first.rounds.saturating_sub(walk_cost.rounds);
    messages += first.messages.saturating_sub(walk_cost.messages);
    bits = bits.max(first.max_bits);
    let remaining = (t0 - t) as u64;
    let (full, rest) = (remaining / p as u64, (remaining % p as u64) as usize);
    for (k, c) in costs.iter().cycle().skip(1).take(p).enumerate() {
        let times = full + u64::from(k < rest);
        rounds += times * c.rounds;
        messages += times * c.messages;
        if times > 0 {
            bits = bits.max(c.max_bits);
        }
    }
    net.phase("replay", |net| net.charge(rounds, messages, if messages > 0 { bits } else { 0 }))
}

/// Runs the candidate searches for the current walk state.
fn evaluate_step(
    net: &mut Network,
    g: &Graph,
    walk: &TruncatedWalk<'_, Fixed>,
    cond: &Conditions,
    t: usize,
    rng: &mut Rng,
) -> Result<Option<SweepCandidate>> {
    let state = walk.state();
    let tree = walk.tree();
    let mass = &state.mass;
    let support = state.support();
    let key_of = |x: VertexId| SweepKey { mass: mass[x], deg: g.degree(x).max(1), id: x };

    net.phase("keys", |net| neighbor_exchange(net, g, &support, Fixed::BITS + 2 * ID_BITS))?;

    // A vertex's rank follows from comparing keys with its neighbors; the
    // sweep is computed once here instead of per vertex.
    let sweep = sweep_order(g, state);
    let mut rank = vec![usize::MAX; g.n()];
    for (i, &x) in sweep.order.iter().enumerate() {
        rank[x] = i;
    }
    let elements: Vec<Vec<SweepKey>> = tree
        .members()
        .iter()
        .map(|&x| if mass[x].is_positive() { vec![key_of(x)] } else { Vec::new() })
        .collect();

    net.phase("search", |net| {
        // (key, j, volume) of the previous candidate.
        let mut prev: Option<(SweepKey, u64, u64)> = None;
        loop {
            let lower = prev.map(|p| p.0);
            let (jp, volp) = prev.map(|p| (p.1, p.2)).unwrap_or((0, 0));
            let mut accepted: Option<[u64; 3]> = None;
            let outcome = random_binary_search(net, g, tree, &elements, lower, rng, |net, key| {
                let r = rank[key.id];
                let values: Vec<[u64; 3]> = tree
                    .members()
                    .iter()
                    .map(|&x| {
                        if rank[x] > r {
                            return [0; 3];
                        }
                        let out = g.neighbors(x).iter().filter(|&&w| rank[w] > r).count() as u64;
                        [1, g.degree(x), out]
                    })
                    .collect();
                let sums = tree_sum(net, g, tree, &values)?[0];
                let ok = sums[0] <= jp + 1 || sums[1] as f64 <= (1.0 + cond.phi) * volp as f64;
                if ok {
                    accepted = Some(sums);
                }
                Ok(ok)
            })?;
            let Some(key) = outcome.boundary.filter(|k| Some(*k) != lower) else {
                return Ok(None);
            };
            let [j, vol, bnd] = accepted.expect("boundary moved, so some sample was accepted");
            let pass = if j == jp + 1 {
                cond.plain(vol, bnd, key.mass.as_f64(), key.deg)
            } else {
                let pk = lower.expect("skipping ahead needs a previous candidate");
                cond.relaxed(vol, bnd, pk.mass.as_f64(), pk.deg)
            };
            if pass {
                broadcast(net, g, tree, &key)?;
                let tested = if j == jp + 1 { key.id } else { lower.map(|k| k.id).unwrap_or(key.id) };
                return Ok(Some(candidate(g, t, &sweep, j as usize, mass, tested, cond.total_volume)));
            }
            prev = Some((key, j, vol));
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::congest::Backend;
    use crate::generators::{barbell, clique, cycle};
    use crate::rng::seeded;
    use crate::walks::{derive_nibble_params, Profile};

    fn sweep_from(vols: &[u64]) -> Sweep {
        let mut acc = 0;
        let prefix_volume = vols
            .iter()
            .map(|v| {
                acc += v;
                acc
            })
            .collect::<Vec<_>>();
        Sweep { order: (0..vols.len()).collect(), prefix_boundary: vec![0; vols.len()], prefix_volume }
    }

    #[test]
    fn jx_single_vertex() {
        assert_eq!(jx_sequence(&sweep_from(&[3]), 0.1), vec![1]);
    }

    #[test]
    fn jx_doubles_with_phi_one() {
        assert_eq!(jx_sequence(&sweep_from(&[1; 20]), 1.0), vec![1, 2, 4, 8, 16, 20]);
    }

    #[test]
    fn jx_small_phi_steps_by_one() {
        assert_eq!(jx_sequence(&sweep_from(&[5; 4]), 0.01), vec![1, 2, 3, 4]);
    }

    #[test]
    fn nibble_on_k2_with_huge_b_finds_nothing() {
        let g = clique(2);
        let p = derive_nibble_params(1, 0.5, Profile::Desk).unwrap();
        // (5/7) 2^{b-1} > Vol(V) = 2 as soon as b >= 3.
        assert_eq!(nibble::<f64>(&g, 0, 3, &p), None);
    }

    #[test]
    fn nibble_finds_barbell_side() {
        let g = barbell(8, 1).unwrap();
        let p = derive_nibble_params(g.m() as u64, 0.1, Profile::Desk).unwrap();
        let c = nibble::<Fixed>(&g, 2, 5, &p).expect("side found");
        assert!(c.conductance <= 0.1);
        assert!(6 * c.volume <= 5 * g.total_volume());
    }

    fn both_backends(g: &Graph, v: VertexId, b: u32, p: &NibbleParams, seed: u64) -> NibbleRun {
        let mut a = Network::for_graph(g);
        let mut c = Network::for_graph(g).with_backend(Backend::Charged);
        let ra = approximate_nibble(&mut a, g, v, b, p, &mut seeded(seed)).unwrap();
        let rc = approximate_nibble(&mut c, g, v, b, p, &mut seeded(seed)).unwrap();
        assert_eq!(ra, rc);
        assert_eq!(a.ledger(), c.ledger());
        ra
    }

    #[test]
    fn distributed_matches_reference() {
        for (g, phi) in [(barbell(6, 1).unwrap(), 0.08), (cycle(12), 0.2), (clique(6), 0.05)] {
            let p = derive_nibble_params(g.m() as u64, phi, Profile::Desk).unwrap();
            for seed in 0..6 {
                let v = (seed as usize * 5) % g.n();
                let b = 1 + (seed as u32 % p.ell);
                let run = both_backends(&g, v, b, &p, seed);
                let reference = approximate_nibble_reference::<Fixed>(&g, v, b, &p);
                assert_eq!(run.hit.map(|c| c.members), reference.map(|c| c.members), "seed {seed}");
            }
        }
    }

    #[test]
    fn approximate_output_respects_relaxed_bounds() {
        let g = barbell(8, 1).unwrap();
        let p = derive_nibble_params(g.m() as u64, 1.0 / 12.0, Profile::Desk).unwrap();
        for b in 1..=p.ell {
            if let Some(c) = approximate_nibble_reference::<Fixed>(&g, 0, b, &p) {
                assert!(c.conductance <= 12.0 * p.phi);
                assert!(12 * c.volume <= 11 * g.total_volume());
            }
        }
    }

    #[test]
    fn replay_charges_full_horizon() {
        let g = clique(5);
        let p = derive_nibble_params(g.m() as u64, 0.05, Profile::Desk).unwrap();
        let mut net = Network::for_graph(&g).with_backend(Backend::Charged);
        let run = approximate_nibble(&mut net, &g, 0, p.ell, &p, &mut seeded(3)).unwrap();
        assert!(run.hit.is_none());
        assert!(run.cycle.is_some());
        assert!(net.ledger().total().rounds >= p.t0);
    }
}
