//! Distributed sampling of start vertices proportional to a weight.

use std::collections::VecDeque;

use rand_distr::{Binomial, Distribution};

use super::tree::tree_sum;
use super::{Message, Network, Outbox, Tree, COUNT_BITS, ID_BITS};
use crate::error::Result;
use crate::graph::{Graph, VertexId};
use crate::rng::Rng;

#[derive(Clone, Copy, Debug)]
struct Tokens {
    kind: u32,
    count: u64,
}

impl Message for Tokens {
    fn bits(&self) -> u64 {
        ID_BITS + COUNT_BITS
    }
}

fn binomial(rng: &mut Rng, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        0
    } else if p >= 1.0 {
        n
    } else {
        Binomial::new(n, p).expect("valid binomial").sample(rng)
    }
}

/// Places `counts[i]` tokens of kind `i` on tree members, each token landing
/// on `v` with probability `weights[v] / Σ weights` independently.
///
/// Subtree weights are first aggregated up the tree. The root then pushes
/// tokens down: a batch of `K` tokens reaching `v` keeps
/// `Binomial(K, w(v)/s(v))` of them and splits the rest among the children
/// in proportion to their subtree weights. Only counts cross edges, and
/// each vertex forwards one kind per round, so the whole run takes about
/// `height + counts.len()` rounds. This part always runs message by message.
///
/// `weights` is indexed by vertex. Returns `(vertex, kind)` pairs sorted
/// ascending, one per token.
pub fn sample_by_degree(
    net: &mut Network,
    g: &Graph,
    tree: &Tree,
    weights: &[u64],
    counts: &[u64],
    rng: &mut Rng,
) -> Result<Vec<(VertexId, usize)>> {
    let members = tree.members();
    let own: Vec<[u64; 1]> = members.iter().map(|&v| [weights[v]]).collect();
    let sub = net.phase("subtree_volume", |net| tree_sum(net, g, tree, &own))?;
    let mut s = vec![0u64; g.n()];
    for (i, &v) in members.iter().enumerate() {
        s[v] = sub[i][0];
    }

    #[derive(Clone, Default)]
    struct St {
        outgoing: VecDeque<Vec<(VertexId, Tokens)>>,
        landed: Vec<(usize, u64)>,
    }
    let mut states = vec![St::default(); g.n()];

    // Split an arriving batch at `v`: some land, the rest are queued for
    // the children as one outgoing wave.
    let split = |v: VertexId, st: &mut St, batch: Tokens, rng: &mut Rng| {
        let stay = binomial(rng, batch.count, weights[v] as f64 / s[v] as f64);
        if stay > 0 {
            st.landed.push((batch.kind as usize, stay));
        }
        let mut rest = batch.count - stay;
        let mut rest_weight = s[v] - weights[v];
        let mut wave = Vec::new();
        for &c in tree.children(v) {
            if rest == 0 {
                break;
            }
            let take = if s[c] == rest_weight { rest } else { binomial(rng, rest, s[c] as f64 / rest_weight as f64) };
            rest -= take;
            rest_weight -= s[c];
            if take > 0 {
                wave.push((c, Tokens { kind: batch.kind, count: take }));
            }
        }
        debug_assert_eq!(rest, 0);
        if !wave.is_empty() {
            st.outgoing.push_back(wave);
        }
    };

    let root = tree.root();
    if s[root] > 0 {
        for (kind, &count) in counts.iter().enumerate() {
            if count > 0 {
                split(root, &mut states[root], Tokens { kind: kind as u32, count }, rng);
            }
        }
    }
    net.phase("token_descent", |net| -> Result<()> {
        let mut active: Vec<VertexId> = if states[root].outgoing.is_empty() { vec![] } else { vec![root] };
        while !active.is_empty() {
            let mut arrivals = Vec::new();
            net.round(
                g,
                &mut states,
                &active,
                |_, st, out: &mut Outbox<Tokens>| {
                    for (c, t) in st.outgoing.pop_front().expect("active vertices have a wave") {
                        out.send(c, t);
                    }
                },
                |v, _, _, t| arrivals.push((v, t)),
            )?;
            let mut next: Vec<VertexId> = active.iter().copied().filter(|&v| !states[v].outgoing.is_empty()).collect();
            for (v, t) in arrivals {
                split(v, &mut states[v], t, rng);
                if !states[v].outgoing.is_empty() {
                    next.push(v);
                }
            }
            next.sort_unstable();
            next.dedup();
            active = next;
        }
        Ok(())
    })?;

    let mut out = Vec::new();
    for &v in members {
        let mut landed = states[v].landed.clone();
        landed.sort_unstable();
        for (kind, count) in landed {
            out.extend(std::iter::repeat_n((v, kind), count as usize));
        }
    }
    out.sort_unstable();
    Ok(out)
}
