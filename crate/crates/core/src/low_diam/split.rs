//! Splitting the vertices into a dense part and a sparse part.
//!
//! A vertex is dense-core (`V_D'`) when most of the edges of its huge
//! neighborhood already sit in its `a`-neighborhood. Starting from the
//! `a`-balls of the dense-core vertices, clusters that come within distance
//! `a` of each other are merged by absorbing their `a`-neighborhoods until
//! nothing changes. The result is `V_D`; everything else is `V_S`.

use serde::Serialize;

use super::neighborhood::{ball, neighborhood_size_estimate, CountingParams};
use crate::congest::{Network, ID_BITS};
use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};
use crate::rng::Rng;

/// Parameters of the split for a given `β`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SplitParams {
    /// `a = ⌈5 log₂ n / β⌉`.
    pub a: usize,
    /// `b = K log₂ n / β`.
    pub b: f64,
    /// Radius of the large neighborhood, `100 a b` capped at `n`.
    pub big: usize,
    pub counting: CountingParams,
    /// Number of vertices used for `log₂ n` and the estimate ladder.
    pub n: usize,
}

impl SplitParams {
    pub fn new(beta: f64, k: f64, f: f64, n: usize) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::BadParameter(format!("beta must lie in (0, 1], got {beta}")));
        }
        if !(f > 0.0 && k > 0.0) {
            return Err(Error::BadParameter(format!("K and f must be positive, got {k} and {f}")));
        }
        let log_n = (n.max(2) as f64).log2();
        let a = (5.0 * log_n / beta).ceil() as usize;
        let b = k * log_n / beta;
        let big = (100.0 * a as f64 * b).ceil().min(n.max(1) as f64) as usize;
        Ok(SplitParams { a, b, big: big.max(1), counting: CountingParams { k, f, log_n }, n })
    }
}

/// Outcome of [`dense_sparse_split`].
#[derive(Clone, Debug, Serialize)]
pub struct DenseSparseSplit {
    pub params: SplitParams,
    /// `V_D'` membership by vertex.
    pub dense_core: Vec<bool>,
    /// `V_D` membership by vertex.
    pub dense: Vec<bool>,
    /// `W_0, W_1, ...` in order; the last entry is `V_D`.
    pub history: Vec<Vec<VertexId>>,
    pub est_small: Vec<f64>,
    pub est_big: Vec<f64>,
}

impl DenseSparseSplit {
    pub fn sparse(&self) -> Vec<VertexId> {
        (0..self.dense.len()).filter(|&v| !self.dense[v]).collect()
    }

    /// Merge iterations after `W_0`.
    pub fn iterations(&self) -> usize {
        self.history.len().saturating_sub(1)
    }
}

fn members(mask: &[bool]) -> Vec<VertexId> {
    (0..mask.len()).filter(|&v| mask[v]).collect()
}

/// Multi-source BFS from `sources` up to `radius` hops.
fn grow(g: &Graph, sources: &[VertexId], radius: usize) -> Vec<bool> {
    let mut seen = vec![false; g.n()];
    let mut frontier = sources.to_vec();
    for &s in sources {
        seen[s] = true;
    }
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
        frontier = next;
    }
    seen
}

/// Components of `G[mask]`, each sorted, ordered by smallest member.
pub(crate) fn masked_components(g: &Graph, mask: &[bool]) -> Vec<Vec<VertexId>> {
    let sub = g.induced(&members(mask));
    sub.graph.connected_components().into_iter().map(|c| sub.to_original(&c)).collect()
}

/// Diameter of `G[s]` for a connected vertex set.
pub(crate) fn induced_diameter(g: &Graph, s: &[VertexId]) -> usize {
    g.induced(s).graph.diameter().unwrap_or(usize::MAX)
}

/// Books a flooding step of `rounds` rounds with every edge carrying one ID.
fn charge_flood(net: &mut Network, g: &Graph, rounds: u64) -> Result<()> {
    let bits = if g.m() > 0 { ID_BITS } else { 0 };
    net.charge(rounds, rounds * 2 * g.m() as u64, bits)
}

/// Runs the merge loop from `W_0 = w0`: every component of `G[W]` that
/// has another component within distance `a` is replaced by its
/// `a`-neighborhood, the others are kept, until `W` no longer changes.
/// Returns the final mask and the history `W_0, W_1, ...`.
pub fn merge_clusters(net: &mut Network, g: &Graph, w0: Vec<bool>, a: usize) -> Result<(Vec<bool>, Vec<Vec<VertexId>>)> {
    let mut w = w0;
    let mut history = vec![members(&w)];
    loop {
        let comps = masked_components(g, &w);
        let mut label = vec![usize::MAX; g.n()];
        for (i, c) in comps.iter().enumerate() {
            for &v in c {
                label[v] = i;
            }
        }
        let mut next = vec![false; g.n()];
        let mut max_diam = 0;
        for (i, c) in comps.iter().enumerate() {
            max_diam = max_diam.max(induced_diameter(g, c));
            let reach = grow(g, c, a);
            let near = (0..g.n()).any(|u| reach[u] && w[u] && label[u] != i);
            if near {
                for u in 0..g.n() {
                    next[u] |= reach[u];
                }
            } else {
                for &u in c {
                    next[u] = true;
                }
            }
        }
        // Leader election inside each component, a probe of depth `a` and
        // the expansion itself.
        charge_flood(net, g, (max_diam + 1 + 2 * a) as u64)?;
        if next == w {
            return Ok((w, history));
        }
        w = next;
        history.push(members(&w));
    }
}

/// Splits `V` into `V_D` and `V_S`.
///
/// Classification uses the estimates `m_v` of `|E(N^a(v))|` and
/// `|E(N^{100ab}(v))|`: `v ∈ V_D'` iff `2b · m_a(v) ≥ (1+f)² · m_big(v)`.
/// With both estimates within a factor `1+f` this admits every vertex with
/// `|E(N^a(v))| ≥ |E(N^{100ab}(v))| / b` and none with
/// `|E(N^a(v))| < |E(N^{100ab}(v))| / (2b)` whenever `(1+f)⁴ ≤ 2`.
pub fn dense_sparse_split(net: &mut Network, g: &Graph, params: &SplitParams, rng: &mut Rng) -> Result<DenseSparseSplit> {
    let SplitParams { a, b, big, counting, n } = *params;
    let est = net.phase("estimate", |net| neighborhood_size_estimate(net, g, &[a, big], &counting, n, rng))?;
    let (est_small, est_big) = (est[0].clone(), est[1].clone());
    let slack = (1.0 + counting.f).powi(2);
    let dense_core: Vec<bool> = (0..g.n()).map(|v| 2.0 * b * est_small[v] >= slack * est_big[v]).collect();

    let w0 = grow(g, &members(&dense_core), a);
    net.phase("grow", |net| charge_flood(net, g, a as u64))?;
    let (w, history) = net.phase("merge", |net| merge_clusters(net, g, w0, a))?;
    Ok(DenseSparseSplit { params: *params, dense_core, dense: w, history, est_small, est_big })
}

/// Independence number of the conflict graph on `nodes` where two nodes
/// conflict when their distance is at most `reach`. Exact; at most 128
/// nodes.
fn max_independent(g: &Graph, nodes: &[VertexId], reach: usize) -> Result<usize> {
    let k = nodes.len();
    if k > 128 {
        return Err(Error::TooLarge { n: k, max: 128 });
    }
    let mut nbr = vec![0u128; k];
    for (i, &u) in nodes.iter().enumerate() {
        let dist = g.bfs_distances(u);
        for (j, &v) in nodes.iter().enumerate() {
            if dist[v].is_some_and(|d| d <= reach) {
                nbr[i] |= 1 << j;
            }
        }
    }
    fn solve(nbr: &[u128], cand: u128) -> usize {
        if cand == 0 {
            return 0;
        }
        // Branch on the closed neighborhood of a minimum-degree candidate:
        // some maximum independent set contains one of its members.
        let mut best_v = 0;
        let mut best_deg = u32::MAX;
        let mut c = cand;
        while c != 0 {
            let v = c.trailing_zeros() as usize;
            c &= c - 1;
            let d = (nbr[v] & cand).count_ones();
            if d < best_deg {
                best_deg = d;
                best_v = v;
            }
        }
        let mut best = 0;
        let mut c = nbr[best_v] & cand;
        while c != 0 {
            let v = c.trailing_zeros() as usize;
            c &= c - 1;
            best = best.max(1 + solve(nbr, cand & !nbr[v]));
        }
        best
    }
    let all = if k == 128 { u128::MAX } else { (1u128 << k) - 1 };
    Ok(solve(&nbr, all))
}

/// One cluster of a `W_i` checked against the invariant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterCheck {
    pub iteration: usize,
    pub size: usize,
    pub diameter: usize,
    /// Largest set of dense-core vertices in the cluster at pairwise
    /// distance more than `2a`.
    pub n_s: usize,
    /// Every dense-core `a`-ball is inside the cluster or disjoint from it.
    pub balls_aligned: bool,
    pub diameter_ok: bool,
    pub count_ok: bool,
}

impl ClusterCheck {
    pub fn holds(&self) -> bool {
        self.balls_aligned && self.diameter_ok && self.count_ok
    }
}

/// Checks every cluster of every `W_i` against the three invariant
/// conditions: aligned `a`-balls, `D_S ≤ 10 a N_S - (4a + 1)` and
/// `N_S ≤ 2b`. Clusters without dense-core vertices are skipped.
pub fn check_invariant(g: &Graph, split: &DenseSparseSplit) -> Result<Vec<ClusterCheck>> {
    let a = split.params.a;
    let core = members(&split.dense_core);
    let balls: Vec<Vec<VertexId>> = core.iter().map(|&u| ball(g, u, a)).collect();
    let mut out = Vec::new();
    for (iteration, wi) in split.history.iter().enumerate() {
        let mut mask = vec![false; g.n()];
        for &v in wi {
            mask[v] = true;
        }
        for s in masked_components(g, &mask) {
            let mut inside = vec![false; g.n()];
            for &v in &s {
                inside[v] = true;
            }
            let core_in: Vec<VertexId> = core.iter().copied().filter(|&u| inside[u]).collect();
            if core_in.is_empty() {
                continue;
            }
            let balls_aligned = balls.iter().all(|bl| {
                let hit = bl.iter().filter(|&&v| inside[v]).count();
                hit == 0 || hit == bl.len()
            });
            let n_s = max_independent(g, &core_in, 2 * a)?;
            let diameter = induced_diameter(g, &s);
            let bound = (10 * a * n_s) as i64 - (4 * a + 1) as i64;
            out.push(ClusterCheck {
                iteration,
                size: s.len(),
                diameter,
                n_s,
                balls_aligned,
                diameter_ok: (diameter as i64) <= bound,
                count_ok: n_s as f64 <= 2.0 * split.params.b,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::congest::Backend;
    use crate::generators::{clique, cycle, path};
    use crate::rng::seeded;

    #[test]
    fn long_cycle_has_no_dense_part() {
        // With 2b < 1 no ball can hold the required share of its larger
        // neighborhood.
        let g = cycle(512);
        let p = SplitParams::new(1.0, 0.05, 3.0 / 16.0, g.n()).unwrap();
        assert!(p.b < 1.0);
        let mut net = Network::for_graph(&g).with_backend(Backend::Charged);
        let s = dense_sparse_split(&mut net, &g, &p, &mut seeded(1)).unwrap();
        assert!(s.dense.iter().all(|x| !x));
        assert_eq!(s.sparse().len(), 512);
    }

    #[test]
    fn clique_is_dense() {
        let g = clique(10);
        let p = SplitParams::new(1.0, 10.0, 3.0 / 16.0, g.n()).unwrap();
        let mut net = Network::for_graph(&g);
        let s = dense_sparse_split(&mut net, &g, &p, &mut seeded(2)).unwrap();
        assert!(s.dense.iter().all(|&x| x));
        assert!(check_invariant(&g, &s).unwrap().iter().all(ClusterCheck::holds));
    }

    #[test]
    fn merge_joins_close_components_only() {
        let g = path(30);
        let mut w0 = vec![false; 30];
        for v in [0, 1, 3, 4, 20] {
            w0[v] = true;
        }
        let mut net = Network::for_graph(&g);
        let (w, history) = merge_clusters(&mut net, &g, w0, 2).unwrap();
        assert_eq!(history[1], vec![0, 1, 2, 3, 4, 5, 6, 20]);
        assert_eq!(members(&w), vec![0, 1, 2, 3, 4, 5, 6, 20]);
        assert_eq!(history.len(), 2);
        for pair in history.windows(2) {
            assert!(pair[0].iter().all(|v| pair[1].contains(v)));
        }
    }

    #[test]
    fn mis_on_a_path() {
        let g = path(10);
        let all: Vec<_> = (0..10).collect();
        assert_eq!(max_independent(&g, &all, 0).unwrap(), 10);
        assert_eq!(max_independent(&g, &all, 1).unwrap(), 5);
        assert_eq!(max_independent(&g, &all, 2).unwrap(), 4);
        assert_eq!(max_independent(&g, &all, 9).unwrap(), 1);
    }

    #[test]
    fn parameters_follow_beta() {
        let p = SplitParams::new(0.5, 10.0, 0.1, 1024).unwrap();
        assert_eq!(p.a, 100);
        assert!((p.b - 200.0).abs() < 1e-9);
        assert_eq!(p.big, 1024);
        assert!(SplitParams::new(0.0, 10.0, 0.1, 8).is_err());
    }
}
