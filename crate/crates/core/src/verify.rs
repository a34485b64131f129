//! Independent checks of decomposition and triangle outputs.
//!
//! Nothing here trusts the producer: inter-component edges are recounted
//! from the original graph, component conductance comes from the exhaustive
//! oracle when it is small enough and from sweep cuts otherwise. A sweep
//! prefix is an actual cut, so a prefix sparser than `φ` proves the
//! component is not a `φ`-expander; the converse is not checked.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{min_conductance_oracle, Graph, VertexId};
use crate::walks::lazy_step;

/// Largest component checked with the exhaustive oracle.
pub const ORACLE_LIMIT: usize = 14;

/// A sweep cut sparser than the threshold it was tested against.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepWitness {
    pub conductance: f64,
    pub start: VertexId,
    pub step: usize,
    pub members: Vec<VertexId>,
}

/// Sparsest sweep cut over lazy walks from up to `max_starts` start
/// vertices (evenly spread over the IDs) and `steps` steps each.
pub fn sparsest_sweep(g: &Graph, steps: usize, max_starts: usize) -> Option<SweepWitness> {
    let n = g.n();
    let total = g.total_volume();
    if n < 2 || total == 0 {
        return None;
    }
    let stride = n.div_ceil(max_starts.max(1)).max(1);
    let mut best: Option<SweepWitness> = None;
    for start in (0..n).step_by(stride) {
        let mut p = vec![0.0f64; n];
        p[start] = 1.0;
        for step in 1..=steps {
            p = lazy_step(g, &p);
            let mut order: Vec<VertexId> = (0..n).filter(|&v| p[v] > 0.0 && g.degree(v) > 0).collect();
            order.sort_by(|&a, &b| {
                let (ra, rb) = (p[a] / g.degree(a) as f64, p[b] / g.degree(b) as f64);
                rb.total_cmp(&ra).then(a.cmp(&b))
            });
            let mut inside = vec![false; n];
            let (mut vol, mut bnd) = (0u64, 0u64);
            for (j, &x) in order.iter().enumerate() {
                let internal = g.neighbors(x).iter().filter(|&&w| inside[w]).count() as u64;
                inside[x] = true;
                vol += g.degree(x);
                bnd = bnd + g.simple_degree(x) - 2 * internal;
                let small = vol.min(total - vol);
                if small == 0 {
                    continue;
                }
                let phi = bnd as f64 / small as f64;
                if best.as_ref().is_none_or(|b| phi < b.conductance) {
                    let mut members = order[..=j].to_vec();
                    members.sort_unstable();
                    best = Some(SweepWitness { conductance: phi, start, step, members });
                }
            }
        }
    }
    best
}

/// How a component's conductance was assessed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// One vertex: there is no cut.
    Trivial,
    Oracle,
    Sweep,
}

/// Conductance evidence for one component.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentCheck {
    pub size: usize,
    pub volume: u64,
    pub method: Method,
    /// Exact `Φ` for the oracle, the sparsest sweep cut found otherwise.
    pub conductance: Option<f64>,
    pub pass: bool,
}

/// Checks `Φ(G{S}) ≥ phi` for a vertex set of `g`.
pub fn check_component(g: &Graph, s: &[VertexId], phi: f64) -> Result<ComponentCheck> {
    let sub = g.contract(s);
    let h = &sub.graph;
    let volume = h.total_volume();
    let (method, conductance) = if h.n() < 2 {
        (Method::Trivial, None)
    } else if h.n() <= ORACLE_LIMIT {
        let (ratio, _) = min_conductance_oracle(h)?;
        (Method::Oracle, Some(*ratio.numer() as f64 / *ratio.denom() as f64))
    } else {
        let steps = 4 * h.n();
        (Method::Sweep, sparsest_sweep(h, steps, 32).map(|w| w.conductance))
    };
    let pass = conductance.is_none_or(|c| c >= phi);
    Ok(ComponentCheck { size: s.len(), volume, method, conductance, pass })
}

/// Result of [`verify_decomposition`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub inter_edges: usize,
    pub edges: usize,
    pub fraction: f64,
    pub epsilon: f64,
    pub phi: f64,
    /// The producer's own count of removed edges agrees with the recount.
    pub count_matches: Option<bool>,
    pub components: Vec<ComponentCheck>,
    pub pass: bool,
}

/// Verifies an `(ε, φ)` decomposition of `g` given as vertex sets.
///
/// Fails with [`Error::Malformed`] when the sets do not partition `V`.
/// `claimed_removed` is compared with the recounted number of
/// inter-component edges when given.
pub fn verify_decomposition(
    g: &Graph,
    components: &[Vec<VertexId>],
    epsilon: f64,
    phi: f64,
    claimed_removed: Option<usize>,
) -> Result<DecompositionReport> {
    let mut owner = vec![usize::MAX; g.n()];
    for (i, c) in components.iter().enumerate() {
        for &v in c {
            let slot = owner.get_mut(v).ok_or_else(|| Error::Malformed(format!("vertex {v} out of range")))?;
            if *slot != usize::MAX {
                return Err(Error::Malformed(format!("vertex {v} appears twice")));
            }
            *slot = i;
        }
    }
    if let Some(v) = owner.iter().position(|&o| o == usize::MAX) {
        return Err(Error::Malformed(format!("vertex {v} is in no component")));
    }
    let inter_edges = g.edges().filter(|&(u, v)| owner[u] != owner[v]).count();
    let edges = g.m();
    let fraction = if edges == 0 { 0.0 } else { inter_edges as f64 / edges as f64 };
    let checks = components.iter().map(|c| check_component(g, c, phi)).collect::<Result<Vec<_>>>()?;
    let count_matches = claimed_removed.map(|r| r == inter_edges);
    let pass = inter_edges as f64 <= epsilon * edges as f64 && checks.iter().all(|c| c.pass) && count_matches != Some(false);
    Ok(DecompositionReport {
        inter_edges,
        edges,
        fraction,
        epsilon,
        phi,
        count_matches,
        components: checks,
        pass,
    })
}

/// Result of [`verify_triangles`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TriangleReport {
    pub count: usize,
    /// Triples that are not triangles of the graph or not in ascending order.
    pub invalid: Vec<[VertexId; 3]>,
    pub duplicates: usize,
    /// Equality with the brute-force set, when it was computed.
    pub matches_oracle: Option<bool>,
    pub pass: bool,
}

/// Re-checks every reported triple against `g`, and optionally compares
/// the set with `oracle`.
pub fn verify_triangles(g: &Graph, triples: &[[VertexId; 3]], oracle: Option<&[[VertexId; 3]]>) -> TriangleReport {
    let invalid: Vec<[VertexId; 3]> = triples
        .iter()
        .copied()
        .filter(|&[a, b, c]| !(a < b && b < c && g.has_edge(a, b) && g.has_edge(b, c) && g.has_edge(a, c)))
        .collect();
    let set: BTreeSet<[VertexId; 3]> = triples.iter().copied().collect();
    let duplicates = triples.len() - set.len();
    let matches_oracle = oracle.map(|o| o.iter().copied().collect::<BTreeSet<_>>() == set);
    let pass = invalid.is_empty() && duplicates == 0 && matches_oracle != Some(false);
    TriangleReport { count: set.len(), invalid, duplicates, matches_oracle, pass }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{barbell, clique, cycle};

    fn disjoint_cliques() -> Graph {
        let mut e: Vec<(usize, usize)> = clique(4).edges().collect();
        e.extend(clique(4).edges().map(|(u, v)| (u + 4, v + 4)));
        Graph::from_edges(8, e).unwrap()
    }

    #[test]
    fn disjoint_cliques_pass() {
        let g = disjoint_cliques();
        let r = verify_decomposition(&g, &[vec![0, 1, 2, 3], vec![4, 5, 6, 7]], 0.1, 0.3, Some(0)).unwrap();
        assert_eq!(r.inter_edges, 0);
        assert!(r.pass);
    }

    #[test]
    fn moved_vertex_fails() {
        let g = disjoint_cliques();
        let r = verify_decomposition(&g, &[vec![0, 1, 2], vec![3, 4, 5, 6, 7]], 0.1, 0.3, Some(0)).unwrap();
        assert_eq!(r.inter_edges, 3);
        assert_eq!(r.count_matches, Some(false));
        assert!(!r.pass);
    }

    #[test]
    fn non_partition_is_malformed() {
        let g = disjoint_cliques();
        assert!(matches!(verify_decomposition(&g, &[vec![0, 1, 2, 3]], 0.1, 0.3, None), Err(Error::Malformed(_))));
        assert!(matches!(
            verify_decomposition(&g, &[vec![0, 1, 2, 3, 4], vec![4, 5, 6, 7]], 0.1, 0.3, None),
            Err(Error::Malformed(_))
        ));
    }

    #[test]
    fn barbell_is_not_a_good_expander() {
        let g = barbell(4, 1).unwrap();
        let all: Vec<_> = (0..g.n()).collect();
        let c = check_component(&g, &all, 0.1).unwrap();
        assert_eq!(c.method, Method::Oracle);
        assert!((c.conductance.unwrap() - 1.0 / 13.0).abs() < 1e-12);
        assert!(!c.pass);
        assert!(check_component(&g, &all, 1.0 / 13.0).unwrap().pass);
    }

    #[test]
    fn sweep_finds_the_bridge() {
        let g = barbell(10, 1).unwrap();
        let w = sparsest_sweep(&g, 40, 4).unwrap();
        assert!((w.conductance - 1.0 / 91.0).abs() < 1e-12, "{}", w.conductance);
        let all: Vec<_> = (0..g.n()).collect();
        let c = check_component(&g, &all, 0.05).unwrap();
        assert_eq!(c.method, Method::Sweep);
        assert!(!c.pass);
    }

    #[test]
    fn triangle_report() {
        let g = clique(4);
        let good = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
        assert!(verify_triangles(&g, &good, Some(&good)).pass);
        let r = verify_triangles(&cycle(6), &[[0, 1, 2]], None);
        assert_eq!(r.invalid.len(), 1);
        assert!(!r.pass);
        let r = verify_triangles(&g, &[[0, 1, 2], [0, 1, 2]], None);
        assert_eq!(r.duplicates, 1);
    }
}
