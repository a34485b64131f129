//! Undirected graphs with self-loop multiplicities.
//!
//! Degrees are fixed at construction: removing an edge turns it into one
//! self loop at each endpoint, and restricting to a vertex subset adds
//! loops for every edge that left the subset. Volumes, and therefore
//! conductances measured inside any working subgraph, stay comparable with
//! the original input.

mod cut;
mod io;
mod oracle;

pub use cut::Cut;
pub use oracle::{min_conductance_oracle, mixing_time_estimate, ORACLE_MAX_VERTICES};

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Vertex identifier: an index into `0..n`.
pub type VertexId = usize;

/// An undirected graph whose simple part has no parallel edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<VertexId>>,
    loops: Vec<u64>,
    m: usize,
}

impl Graph {
    /// `n` isolated vertices.
    pub fn empty(n: usize) -> Self {
        Graph { adj: vec![Vec::new(); n], loops: vec![0; n], m: 0 }
    }

    /// Builds a simple graph, rejecting self loops, duplicates and
    /// out-of-range endpoints.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (VertexId, VertexId)>,
    {
        let mut g = Graph::empty(n);
        for (u, v) in edges {
            g.add_edge(u, v)?;
        }
        for (u, list) in g.adj.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::BadParameter(format!("duplicate edge {{{u}, {}}}", w[0])));
            }
        }
        Ok(g)
    }

    fn add_edge(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        let n = self.n();
        for x in [u, v] {
            if x >= n {
                return Err(Error::UnknownVertex(x));
            }
        }
        if u == v {
            return Err(Error::BadParameter(format!("self loop at {u}")));
        }
        self.adj[u].push(v);
        self.adj[v].push(u);
        self.m += 1;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    /// Number of simple edges (self loops excluded).
    pub fn m(&self) -> usize {
        self.m
    }

    /// Sorted simple neighbors of `v`.
    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adj[v]
    }

    pub fn self_loops(&self, v: VertexId) -> u64 {
        self.loops[v]
    }

    /// Number of simple edges at `v`.
    pub fn simple_degree(&self, v: VertexId) -> u64 {
        self.adj[v].len() as u64
    }

    /// Simple edges plus self loops, each loop counting once.
    pub fn degree(&self, v: VertexId) -> u64 {
        self.adj[v].len() as u64 + self.loops[v]
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        u < self.n() && self.adj[u].binary_search(&v).is_ok()
    }

    /// Simple edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    /// Vol(V).
    pub fn total_volume(&self) -> u64 {
        (0..self.n()).map(|v| self.degree(v)).sum()
    }

    /// Sum of degrees over `s`. Duplicate entries are counted once.
    pub fn volume(&self, s: &[VertexId]) -> u64 {
        let mut seen = vec![false; self.n()];
        let mut vol = 0;
        for &v in s {
            if !seen[v] {
                seen[v] = true;
                vol += self.degree(v);
            }
        }
        vol
    }

    /// Number of simple edges with exactly one endpoint marked in `inside`.
    pub fn boundary_size(&self, inside: &[bool]) -> u64 {
        self.edges().filter(|&(u, v)| inside[u] != inside[v]).count() as u64
    }

    /// Volume, boundary and conductance of `s`.
    pub fn cut_stats(&self, s: &[VertexId]) -> Result<Cut> {
        Cut::new(self, s)
    }

    /// Replaces the simple edge `{u, v}` by one self loop at each endpoint.
    pub fn remove_edge_to_loops(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        let pos_u = self.adj.get(u).and_then(|l| l.binary_search(&v).ok());
        let pos_v = self.adj.get(v).and_then(|l| l.binary_search(&u).ok());
        match (pos_u, pos_v) {
            (Some(pu), Some(pv)) => {
                self.adj[u].remove(pu);
                self.adj[v].remove(pv);
                self.loops[u] += 1;
                self.loops[v] += 1;
                self.m -= 1;
                Ok(())
            }
            _ => Err(Error::MissingEdge(u, v)),
        }
    }

    /// G{S}: the subgraph induced by `s` in which every vertex keeps its
    /// degree, edges leaving `s` being replaced by self loops.
    pub fn contract(&self, s: &[VertexId]) -> Subgraph {
        self.restrict(s, true)
    }

    /// G[S]: the plain induced subgraph without compensating loops.
    pub fn induced(&self, s: &[VertexId]) -> Subgraph {
        self.restrict(s, false)
    }

    fn restrict(&self, s: &[VertexId], keep_degrees: bool) -> Subgraph {
        let mut ids: Vec<VertexId> = s.to_vec();
        ids.sort_unstable();
        ids.dedup();
        let mut local = vec![usize::MAX; self.n()];
        for (i, &v) in ids.iter().enumerate() {
            local[v] = i;
        }
        let mut g = Graph::empty(ids.len());
        for (i, &v) in ids.iter().enumerate() {
            let mut outside = 0;
            for &w in &self.adj[v] {
                if local[w] == usize::MAX {
                    outside += 1;
                } else {
                    g.adj[i].push(local[w]);
                }
            }
            g.loops[i] = if keep_degrees { self.loops[v] + outside } else { 0 };
        }
        g.m = g.adj.iter().map(Vec::len).sum::<usize>() / 2;
        Subgraph { graph: g, ids }
    }

    /// Hop distances from `src` along simple edges.
    pub fn bfs_distances(&self, src: VertexId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n()];
        dist[src] = Some(0);
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or(0);
            for &w in &self.adj[u] {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Connected components of the simple part, each sorted, ordered by
    /// smallest member.
    pub fn connected_components(&self) -> Vec<Vec<VertexId>> {
        let mut label = vec![usize::MAX; self.n()];
        let mut comps = Vec::new();
        for s in 0..self.n() {
            if label[s] != usize::MAX {
                continue;
            }
            let id = comps.len();
            let mut comp = vec![s];
            label[s] = id;
            let mut head = 0;
            while head < comp.len() {
                let u = comp[head];
                head += 1;
                for &w in &self.adj[u] {
                    if label[w] == usize::MAX {
                        label[w] = id;
                        comp.push(w);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    pub fn is_connected(&self) -> bool {
        self.n() <= 1 || self.connected_components().len() == 1
    }

    /// Largest hop distance between two vertices of a connected graph, or
    /// `None` if the graph is disconnected.
    pub fn diameter(&self) -> Option<usize> {
        let mut best = 0;
        for v in 0..self.n() {
            for d in self.bfs_distances(v) {
                best = best.max(d?);
            }
        }
        Some(best)
    }
}

/// A restriction of a larger graph, with the map back to original IDs.
///
/// `ids` is sorted, so local index order agrees with original ID order and
/// ID-based tie-breaking is unaffected by restriction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subgraph {
    pub graph: Graph,
    pub ids: Vec<VertexId>,
}

impl Subgraph {
    /// Local index of an original vertex.
    pub fn local(&self, original: VertexId) -> Option<usize> {
        self.ids.binary_search(&original).ok()
    }

    /// Maps local vertices back to original IDs.
    pub fn to_original(&self, local: &[VertexId]) -> Vec<VertexId> {
        local.iter().map(|&v| self.ids[v]).collect()
    }
}
