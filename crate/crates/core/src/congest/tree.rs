//! Rooted trees over graph edges and the primitives that run on them.
//!
//! Per-member data is passed in *member order*: the order of
//! [`Tree::members`], in which every parent precedes its children. This keeps
//! the charged backend proportional to the tree size rather than to `n`.

use super::{Backend, Message, Network, Outbox, ID_BITS};
use crate::error::Result;
use crate::graph::{Graph, VertexId};

const ABSENT: u32 = u32::MAX;

/// A rooted tree whose edges are edges of some host graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tree {
    root: VertexId,
    members: Vec<VertexId>,
    index: Vec<u32>,
    parent: Vec<Option<VertexId>>,
    depth: Vec<u32>,
    children: Vec<Vec<VertexId>>,
    height: u32,
}

impl Tree {
    /// The one-vertex tree on `root` in a graph with `n` vertices.
    pub fn singleton(n: usize, root: VertexId) -> Self {
        let mut index = vec![ABSENT; n];
        index[root] = 0;
        Tree {
            root,
            members: vec![root],
            index,
            parent: vec![None],
            depth: vec![0],
            children: vec![Vec::new()],
            height: 0,
        }
    }

    /// Adds `v` as a child of the member `parent`.
    ///
    /// # Panics
    /// If `v` is already a member or `parent` is not.
    pub fn attach(&mut self, v: VertexId, parent: VertexId) {
        assert_eq!(self.index[v], ABSENT, "vertex {v} already in tree");
        let p = self.index[parent];
        assert_ne!(p, ABSENT, "parent {parent} not in tree");
        let i = self.members.len();
        self.index[v] = i as u32;
        self.members.push(v);
        self.parent.push(Some(parent));
        let d = self.depth[p as usize] + 1;
        self.depth.push(d);
        self.children.push(Vec::new());
        let siblings = &mut self.children[p as usize];
        let at = siblings.partition_point(|&c| c < v);
        siblings.insert(at, v);
        self.height = self.height.max(d);
    }

    pub fn root(&self) -> VertexId {
        self.root
    }

    /// Members with every parent listed before its children.
    pub fn members(&self) -> &[VertexId] {
        &self.members
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn height(&self) -> usize {
        self.height as usize
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.index.get(v).is_some_and(|&i| i != ABSENT)
    }

    /// Position of `v` in member order.
    pub fn position(&self, v: VertexId) -> Option<usize> {
        self.index.get(v).filter(|&&i| i != ABSENT).map(|&i| i as usize)
    }

    pub fn parent(&self, v: VertexId) -> Option<VertexId> {
        self.position(v).and_then(|i| self.parent[i])
    }

    pub fn depth(&self, v: VertexId) -> Option<usize> {
        self.position(v).map(|i| self.depth[i] as usize)
    }

    /// Children of a member, ascending by ID.
    pub fn children(&self, v: VertexId) -> &[VertexId] {
        self.position(v).map_or(&[], |i| &self.children[i])
    }

    /// Vertices on the path from the root down to `target`, both included.
    pub fn path_from_root(&self, target: VertexId) -> Vec<VertexId> {
        let mut path = vec![target];
        let mut x = target;
        while let Some(p) = self.parent(x) {
            path.push(p);
            x = p;
        }
        path.reverse();
        path
    }
}

#[derive(Clone, Copy)]
struct Join;

impl Message for Join {
    fn bits(&self) -> u64 {
        ID_BITS
    }
}

/// Opaque payload of a given width, for messages whose content the caller
/// tracks itself.
#[derive(Clone, Copy, Debug)]
pub struct Opaque(pub u64);

impl Message for Opaque {
    fn bits(&self) -> u64 {
        self.0
    }
}

/// Breadth-first tree from `root` over the edges accepted by `filter`.
///
/// Always message-level. A vertex adopts the smallest-ID sender of the
/// first join wave it hears, then forwards the wave to every filtered
/// neighbor it has not heard from. The run stops once no frontier vertex
/// has an unreached filtered neighbor, so the round count equals the
/// eccentricity of `root` in the filtered graph.
pub fn bfs_tree(net: &mut Network, g: &Graph, root: VertexId, filter: impl Fn(VertexId, VertexId) -> bool) -> Result<Tree> {
    #[derive(Clone, Default)]
    struct St {
        reached: bool,
        heard: Vec<VertexId>,
    }
    let n = g.n();
    let mut tree = Tree::singleton(n, root);
    let mut states = vec![St::default(); n];
    states[root].reached = true;
    let mut frontier = vec![root];
    net.phase("bfs", |net| {
        loop {
            let pending = frontier
                .iter()
                .any(|&v| g.neighbors(v).iter().any(|&w| filter(v, w) && !states[w].reached));
            if !pending {
                return Ok(tree);
            }
            let mut fresh: Vec<(VertexId, VertexId)> = Vec::new();
            net.round(
                g,
                &mut states,
                &frontier,
                |v, st, out: &mut Outbox<Join>| {
                    for &w in g.neighbors(v) {
                        if filter(v, w) && st.heard.binary_search(&w).is_err() {
                            out.send(w, Join);
                        }
                    }
                },
                |v, st, from, _| {
                    if !st.reached {
                        st.reached = true;
                        fresh.push((v, from));
                    }
                    if fresh.last().is_some_and(|&(x, _)| x == v) {
                        st.heard.push(from);
                    }
                },
            )?;
            frontier.clear();
            for (v, parent) in fresh {
                tree.attach(v, parent);
                frontier.push(v);
            }
        }
    })
}

/// Component-wise sums over every subtree.
///
/// `values` and the result are in member order. Rounds equal the tree
/// height; each non-root member sends one `N`-word message to its parent.
pub fn tree_sum<const N: usize>(net: &mut Network, g: &Graph, tree: &Tree, values: &[[u64; N]]) -> Result<Vec<[u64; N]>> {
    assert_eq!(values.len(), tree.size());
    match net.backend() {
        Backend::Charged => {
            let mut acc = values.to_vec();
            for i in (1..tree.size()).rev() {
                let p = tree.position(tree.parent[i].expect("non-root")).expect("member");
                let child = acc[i];
                for (a, c) in acc[p].iter_mut().zip(child) {
                    *a += c;
                }
            }
            let messages = tree.size() as u64 - 1;
            let bits = if messages > 0 { [0u64; N].bits() } else { 0 };
            net.charge(tree.height as u64, messages, bits)?;
            Ok(acc)
        }
        Backend::Simulated => {
            #[derive(Clone)]
            struct St<const N: usize> {
                acc: [u64; N],
                waiting: usize,
            }
            let mut states: Vec<St<N>> = vec![St { acc: [0; N], waiting: 0 }; g.n()];
            let mut active = Vec::new();
            for (i, &v) in tree.members.iter().enumerate() {
                states[v] = St { acc: values[i], waiting: tree.children[i].len() };
                if v != tree.root && tree.children[i].is_empty() {
                    active.push(v);
                }
            }
            while !active.is_empty() {
                let mut next = Vec::new();
                net.round(
                    g,
                    &mut states,
                    &active,
                    |v, st, out| out.send(tree.parent(v).expect("non-root"), st.acc),
                    |v, st, _, msg: [u64; N]| {
                        for (a, c) in st.acc.iter_mut().zip(msg) {
                            *a += c;
                        }
                        st.waiting -= 1;
                        if st.waiting == 0 && v != tree.root {
                            next.push(v);
                        }
                    },
                )?;
                active = next;
            }
            Ok(tree.members.iter().map(|&v| states[v].acc).collect())
        }
    }
}

/// Sends `value` from the root to every member. Rounds equal the height.
pub fn broadcast<V: Message + Clone>(net: &mut Network, g: &Graph, tree: &Tree, value: &V) -> Result<()> {
    match net.backend() {
        Backend::Charged => {
            let messages = tree.size() as u64 - 1;
            net.charge(tree.height as u64, messages, if messages > 0 { value.bits() } else { 0 })
        }
        Backend::Simulated => {
            let mut states: Vec<Option<V>> = vec![None; g.n()];
            states[tree.root] = Some(value.clone());
            let mut active = vec![tree.root];
            while active.iter().any(|&v| !tree.children(v).is_empty()) {
                let mut next = Vec::new();
                net.round(
                    g,
                    &mut states,
                    &active,
                    |v, st, out: &mut Outbox<V>| {
                        for &c in tree.children(v) {
                            out.send(c, st.clone().expect("holds value"));
                        }
                    },
                    |v, st, _, msg| {
                        *st = Some(msg);
                        next.push(v);
                    },
                )?;
                active = next;
            }
            debug_assert!(tree.members.iter().all(|&v| states[v].is_some()));
            Ok(())
        }
    }
}

/// Moves a `bits`-wide token from the root down to `target`.
pub fn descend(net: &mut Network, g: &Graph, tree: &Tree, target: VertexId, bits: u64) -> Result<()> {
    walk_path(net, g, &tree.path_from_root(target), bits)
}

/// Moves a `bits`-wide token from `target` up to the root.
pub fn lift(net: &mut Network, g: &Graph, tree: &Tree, target: VertexId, bits: u64) -> Result<()> {
    let mut path = tree.path_from_root(target);
    path.reverse();
    walk_path(net, g, &path, bits)
}

fn walk_path(net: &mut Network, g: &Graph, path: &[VertexId], bits: u64) -> Result<()> {
    let hops = path.len() as u64 - 1;
    match net.backend() {
        Backend::Charged => net.charge(hops, hops, if hops > 0 { bits } else { 0 }),
        Backend::Simulated => {
            let mut states = vec![(); g.n()];
            for hop in path.windows(2) {
                net.round(g, &mut states, &hop[..1], |_, _, out| out.send(hop[1], Opaque(bits)), |_, _, _, _| {})?;
            }
            Ok(())
        }
    }
}

/// One round in which every vertex of `senders` sends a `bits`-wide
/// message over each of its simple edges.
pub fn neighbor_exchange(net: &mut Network, g: &Graph, senders: &[VertexId], bits: u64) -> Result<()> {
    match net.backend() {
        Backend::Charged => {
            let messages: u64 = senders.iter().map(|&v| g.simple_degree(v)).sum();
            net.charge(1, messages, if messages > 0 { bits } else { 0 })
        }
        Backend::Simulated => {
            let mut states = vec![(); g.n()];
            net.round(
                g,
                &mut states,
                senders,
                |v, _, out| {
                    for &w in g.neighbors(v) {
                        out.send(w, Opaque(bits));
                    }
                },
                |_, _, _, _| {},
            )?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{barbell, clique, path, star};

    fn both<R: PartialEq + std::fmt::Debug>(g: &Graph, f: impl Fn(&mut Network) -> R) -> R {
        let mut sim = Network::for_graph(g);
        let mut chg = Network::for_graph(g).with_backend(Backend::Charged);
        let a = f(&mut sim);
        let b = f(&mut chg);
        assert_eq!(a, b);
        assert_eq!(sim.ledger(), chg.ledger());
        a
    }

    #[test]
    fn bfs_on_path_and_star() {
        let g = path(5);
        let mut net = Network::for_graph(&g);
        let t = bfs_tree(&mut net, &g, 0, |_, _| true).unwrap();
        assert_eq!((0..5).map(|v| t.depth(v).unwrap()).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4]);
        assert_eq!(net.ledger().total().rounds, 4);

        let g = star(8);
        let mut net = Network::for_graph(&g);
        let t = bfs_tree(&mut net, &g, 0, |_, _| true).unwrap();
        assert!((1..9).all(|v| t.depth(v) == Some(1)));
        assert_eq!(net.ledger().total().rounds, 1);
    }

    #[test]
    fn bfs_matches_distances_and_picks_smallest_parent() {
        let g = barbell(4, 1).unwrap();
        let mut net = Network::for_graph(&g);
        let t = bfs_tree(&mut net, &g, 1, |_, _| true).unwrap();
        let dist = g.bfs_distances(1);
        for v in 0..g.n() {
            assert_eq!(t.depth(v), dist[v]);
            if let Some(p) = t.parent(v) {
                let best = g.neighbors(v).iter().copied().filter(|&w| dist[w] == Some(dist[v].unwrap() - 1)).min();
                assert_eq!(Some(p), best);
            }
        }
    }

    #[test]
    fn bfs_respects_filter() {
        let g = barbell(4, 1).unwrap();
        let mut net = Network::for_graph(&g);
        let t = bfs_tree(&mut net, &g, 0, |u, v| (u < 4) == (v < 4)).unwrap();
        assert_eq!(t.size(), 4);
        assert!(!t.contains(5));
    }

    #[test]
    fn degree_sum_over_k4() {
        let g = clique(4);
        let mut net = Network::for_graph(&g);
        let t = bfs_tree(&mut net, &g, 0, |_, _| true).unwrap();
        let sums = both(&g, |net| {
            let vals: Vec<[u64; 1]> = t.members().iter().map(|&v| [g.degree(v)]).collect();
            tree_sum(net, &g, &t, &vals).unwrap()
        });
        assert_eq!(sums[0], [12]);
    }

    #[test]
    fn subtree_volumes_on_path() {
        // Path 0-1-2-3-4 rooted at 0: s(v) = sum of degrees of v..4.
        let g = path(5);
        let mut net = Network::for_graph(&g);
        let t = bfs_tree(&mut net, &g, 0, |_, _| true).unwrap();
        let sums = both(&g, |net| {
            let vals: Vec<[u64; 2]> = t.members().iter().map(|&v| [g.degree(v), 1]).collect();
            tree_sum(net, &g, &t, &vals).unwrap()
        });
        let expected: Vec<u64> = (0..5).map(|v| (v..5).map(|u| g.degree(u)).sum()).collect();
        for (i, &v) in t.members().iter().enumerate() {
            assert_eq!(sums[i][0], expected[v]);
            assert_eq!(sums[i][1], 5 - v as u64);
        }
    }

    #[test]
    fn broadcast_and_paths_cost_the_same_in_both_backends() {
        let g = barbell(5, 1).unwrap();
        let mut net = Network::for_graph(&g);
        let t = bfs_tree(&mut net, &g, 2, |_, _| true).unwrap();
        both(&g, |net| {
            broadcast(net, &g, &t, &(g.n() as u64 - 1)).unwrap();
            descend(net, &g, &t, 9, 96).unwrap();
            lift(net, &g, &t, 9, 128).unwrap();
            neighbor_exchange(net, &g, &[0, 5, 9], 64).unwrap();
            net.ledger().total()
        });
        let mut sim = Network::for_graph(&g);
        broadcast(&mut sim, &g, &t, &7u64).unwrap();
        assert_eq!(sim.ledger().total().rounds, t.height() as u64);
        assert_eq!(sim.ledger().total().messages, g.n() as u64 - 1);
    }

    #[test]
    fn singleton_tree_costs_nothing() {
        let g = Graph::empty(1);
        let t = Tree::singleton(1, 0);
        let sums = both(&g, |net| {
            let s = tree_sum(net, &g, &t, &[[5u64]]).unwrap();
            broadcast(net, &g, &t, &1u64).unwrap();
            (s, net.ledger().total().rounds)
        });
        assert_eq!(sums, (vec![[5]], 0));
    }
}
