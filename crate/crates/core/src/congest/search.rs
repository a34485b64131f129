//! Random binary search over keys scattered across a tree.

use rand::Rng as _;

use super::tree::{broadcast, descend, lift, tree_sum};
use super::{Message, Network, Tree, COUNT_BITS, ID_BITS};
use crate::error::Result;
use crate::graph::{Graph, VertexId};
use crate::rng::Rng;

/// Result of [`random_binary_search`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchOutcome<K> {
    /// Largest key on which the predicate held, or the starting lower bound
    /// if it held on none.
    pub boundary: Option<K>,
    /// Number of keys sampled.
    pub iterations: usize,
}

/// Finds the last key satisfying a monotone predicate.
///
/// `elements[i]` holds the keys stored at the `i`-th tree member (member
/// order), each list sorted ascending. The predicate must be true on a
/// prefix of the global key order; `lower`, if given, is a key known to
/// satisfy it and the search only looks above it.
///
/// Each iteration counts the keys left in the open search interval with a
/// bottom-up sum, lets the root draw a uniform rank, walks a token down to
/// the key of that rank (members' own keys first, then children by ID),
/// returns the key to the root and broadcasts it. The predicate is then
/// evaluated with whatever communication it needs, and the interval shrinks
/// to one side of the sampled key. The loop ends when the interval is empty.
pub fn random_binary_search<K, P>(
    net: &mut Network,
    g: &Graph,
    tree: &Tree,
    elements: &[Vec<K>],
    lower: Option<K>,
    rng: &mut Rng,
    mut pred: P,
) -> Result<SearchOutcome<K>>
where
    K: Ord + Clone + Message,
    P: FnMut(&mut Network, &K) -> Result<bool>,
{
    assert_eq!(elements.len(), tree.size());
    let mut lo = lower;
    let mut hi: Option<K> = None;
    let mut iterations = 0;
    loop {
        let in_range = |k: &K| lo.as_ref().is_none_or(|l| k > l) && hi.as_ref().is_none_or(|h| k < h);
        let own: Vec<[u64; 1]> = elements.iter().map(|e| [e.iter().filter(|k| in_range(k)).count() as u64]).collect();
        let sub = tree_sum(net, g, tree, &own)?;
        let total = sub[0][0];
        if total == 0 {
            return Ok(SearchOutcome { boundary: lo, iterations });
        }
        let mut r = rng.random_range(0..total);
        let mut x = tree.root();
        let key = 'find: loop {
            let i = tree.position(x).expect("member");
            if r < own[i][0] {
                break elements[i].iter().filter(|k| in_range(k)).nth(r as usize).expect("rank in range").clone();
            }
            r -= own[i][0];
            for &c in tree.children(x) {
                let ci = tree.position(c).expect("member");
                if r < sub[ci][0] {
                    x = c;
                    continue 'find;
                }
                r -= sub[ci][0];
            }
            unreachable!("rank exceeds subtree count");
        };
        descend(net, g, tree, x, ID_BITS + COUNT_BITS)?;
        lift(net, g, tree, x, key.bits())?;
        broadcast(net, g, tree, &KeyMsg(&key))?;
        iterations += 1;
        if pred(net, &key)? {
            lo = Some(key);
        } else {
            hi = Some(key);
        }
    }
}

#[derive(Clone)]
struct KeyMsg<'a, K>(&'a K);

impl<K: Message> Message for KeyMsg<'_, K> {
    fn bits(&self) -> u64 {
        self.0.bits()
    }
}

/// Key made of a single vertex-sized integer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IdKey(pub VertexId);

impl Message for IdKey {
    fn bits(&self) -> u64 {
        ID_BITS
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::congest::bfs_tree;
    use crate::generators::{cycle, path};
    use crate::rng::seeded;

    fn spread(tree: &Tree, keys: usize) -> Vec<Vec<IdKey>> {
        let mut el = vec![Vec::new(); tree.size()];
        for k in 0..keys {
            el[(k * 7) % tree.size()].push(IdKey(k));
        }
        for e in &mut el {
            e.sort();
        }
        el
    }

    #[test]
    fn single_element_takes_one_iteration() {
        let g = path(3);
        let mut net = Network::for_graph(&g);
        let t = bfs_tree(&mut net, &g, 0, |_, _| true).unwrap();
        let mut el = vec![Vec::new(); 3];
        el[2].push(IdKey(42));
        let out = random_binary_search(&mut net, &g, &t, &el, None, &mut seeded(0), |_, _| Ok(true)).unwrap();
        assert_eq!(out, SearchOutcome { boundary: Some(IdKey(42)), iterations: 1 });
    }

    #[test]
    fn always_true_returns_last() {
        let g = cycle(9);
        let mut net = Network::for_graph(&g);
        let t = bfs_tree(&mut net, &g, 0, |_, _| true).unwrap();
        let el = spread(&t, 30);
        let out = random_binary_search(&mut net, &g, &t, &el, None, &mut seeded(1), |_, _| Ok(true)).unwrap();
        assert_eq!(out.boundary, Some(IdKey(29)));
    }

    #[test]
    fn thresholds_match_linear_scan() {
        let g = cycle(12);
        let mut net = Network::for_graph(&g);
        let t = bfs_tree(&mut net, &g, 0, |_, _| true).unwrap();
        let el = spread(&t, 100);
        for seed in 0..100u64 {
            let mut rng = seeded(seed);
            let threshold = rng.random_range(0..=100usize);
            let oracle = (0..100).take_while(|&k| k < threshold).last().map(IdKey);
            let out = random_binary_search(&mut net, &g, &t, &el, None, &mut rng, |_, k| Ok(k.0 < threshold)).unwrap();
            assert_eq!(out.boundary, oracle, "seed {seed}");
        }
    }
}
