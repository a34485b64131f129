//! Low-diameter decompositions.
//!
//! [`exp_shift_clustering`] is the exponential-shift clustering: every
//! vertex wakes up at a random epoch and either founds a cluster or joins
//! an earlier one. [`low_diam_decomposition`] combines it with the dense /
//! sparse split of [`split`], cutting only inter-cluster edges that touch
//! the sparse side, which keeps the number of cut edges at most `β|E|` with
//! high probability.

pub mod neighborhood;
pub mod split;

use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

pub use neighborhood::{
    ladder, neighborhood_edges_exact, neighborhood_size_estimate, neighborhood_threshold_test, CountingParams,
    EdgeIndex, NeighborhoodEdges, NeighborhoodSets,
};
pub use split::{check_invariant, dense_sparse_split, ClusterCheck, DenseSparseSplit, SplitParams};

use crate::congest::{Backend, Message, Network, Outbox, ID_BITS};
use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};
use crate::rng::Rng;

/// A partition of the vertices into clusters grown from centers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Clustering {
    /// Cluster of each vertex, named by its center.
    pub label: Vec<VertexId>,
    /// Centers in increasing order.
    pub centers: Vec<VertexId>,
    /// The neighbor each vertex joined through; `None` for centers.
    pub parent: Vec<Option<VertexId>>,
    /// Epoch at which each vertex was clustered.
    pub epoch: Vec<usize>,
    /// Number of epochs run.
    pub epochs: usize,
}

impl Clustering {
    /// Members of each cluster, in the order of [`Clustering::centers`].
    pub fn clusters(&self) -> Vec<Vec<VertexId>> {
        let mut out: Vec<Vec<VertexId>> = vec![Vec::new(); self.centers.len()];
        for (v, &c) in self.label.iter().enumerate() {
            let i = self.centers.binary_search(&c).expect("label is a center");
            out[i].push(v);
        }
        out
    }

    /// Edges whose endpoints lie in different clusters.
    pub fn inter_cluster_edges(&self, g: &Graph) -> Vec<(VertexId, VertexId)> {
        g.edges().filter(|&(u, v)| self.label[u] != self.label[v]).collect()
    }

    /// Diameter of each cluster's induced subgraph.
    pub fn diameters(&self, g: &Graph) -> Vec<usize> {
        self.clusters().iter().map(|c| split::induced_diameter(g, c)).collect()
    }
}

/// Number of epochs `⌈2 log₂ n / β⌉`.
pub fn epoch_count(n: usize, beta: f64) -> usize {
    (2.0 * (n.max(2) as f64).log2() / beta).ceil() as usize
}

#[derive(Clone, Copy, Debug)]
struct Label(VertexId);

impl Message for Label {
    fn bits(&self) -> u64 {
        ID_BITS
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(Error::BadParameter(format!("beta must lie in (0, 1), got {beta}")))
    }
}

/// Exponential-shift clustering with `δ_v ~ Exp(β)` drawn from `rng` in
/// vertex order. `n` sets the epoch count and may exceed `g.n()`.
pub fn exp_shift_clustering(net: &mut Network, g: &Graph, beta: f64, n: usize, rng: &mut Rng) -> Result<Clustering> {
    check_beta(beta)?;
    let exp = Exp::new(beta).map_err(|e| Error::BadParameter(e.to_string()))?;
    let shifts: Vec<f64> = (0..g.n()).map(|_| exp.sample(rng)).collect();
    clustering_with_shifts(net, g, beta, n, &shifts)
}

/// The clustering for given shifts `δ_v`.
///
/// Vertex `v` starts at epoch `max(1, T - ⌊δ_v⌋)`. In epoch `t`, an
/// unclustered vertex whose start is `t` becomes a center; one whose start
/// is later joins the smallest cluster label announced by a neighbor
/// clustered in epoch `t - 1`. Only newly clustered vertices announce, one
/// round per epoch.
pub fn clustering_with_shifts(net: &mut Network, g: &Graph, beta: f64, n: usize, shifts: &[f64]) -> Result<Clustering> {
    check_beta(beta)?;
    if shifts.len() != g.n() {
        return Err(Error::BadParameter(format!("{} shifts for {} vertices", shifts.len(), g.n())));
    }
    let epochs = epoch_count(n, beta);
    let start: Vec<usize> =
        shifts.iter().map(|&d| epochs.saturating_sub(d.max(0.0).floor().min(epochs as f64) as usize).max(1)).collect();
    let mut label: Vec<Option<VertexId>> = vec![None; g.n()];
    let mut parent = vec![None; g.n()];
    let mut epoch = vec![0; g.n()];
    let mut fresh: Vec<VertexId> = Vec::new();
    net.phase("clustering", |net| -> Result<()> {
        let mut charged_msgs = 0;
        for t in 1..=epochs {
            // Best (label, neighbor) offer per vertex from the previous epoch.
            let mut offer: Vec<Option<(VertexId, VertexId)>> = vec![None; g.n()];
            let take = |v: VertexId, from: VertexId, l: VertexId, offer: &mut Vec<Option<(VertexId, VertexId)>>| {
                if offer[v].is_none_or(|o| (l, from) < o) {
                    offer[v] = Some((l, from));
                }
            };
            match net.backend() {
                Backend::Simulated => {
                    let mut slots = vec![(); g.n()];
                    net.round(
                        g,
                        &mut slots,
                        &fresh,
                        |v, _, out: &mut Outbox<Label>| {
                            for &w in g.neighbors(v) {
                                out.send(w, Label(label[v].expect("fresh vertices are clustered")));
                            }
                        },
                        |v, _, from, Label(l)| take(v, from, l, &mut offer),
                    )?;
                }
                Backend::Charged => {
                    for &u in &fresh {
                        charged_msgs += g.simple_degree(u);
                        for &w in g.neighbors(u) {
                            take(w, u, label[u].expect("fresh vertices are clustered"), &mut offer);
                        }
                    }
                }
            }
            fresh.clear();
            for v in 0..g.n() {
                if label[v].is_some() {
                    continue;
                }
                if start[v] == t {
                    label[v] = Some(v);
                } else if let (true, Some((l, from))) = (start[v] > t, offer[v]) {
                    label[v] = Some(l);
                    parent[v] = Some(from);
                } else {
                    continue;
                }
                epoch[v] = t;
                fresh.push(v);
            }
        }
        if net.backend() == Backend::Charged {
            net.charge(epochs as u64, charged_msgs, if charged_msgs > 0 { ID_BITS } else { 0 })?;
        }
        Ok(())
    })?;
    let label: Vec<VertexId> = label.into_iter().map(|l| l.expect("every vertex starts by the last epoch")).collect();
    let mut centers: Vec<VertexId> = (0..g.n()).filter(|&v| label[v] == v).collect();
    centers.sort_unstable();
    Ok(Clustering { label, centers, parent, epoch, epochs })
}

/// Tunables of [`low_diam_decomposition`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LowDiamConfig {
    /// The constant `K` in `b = K log₂ n / β`.
    pub k: f64,
    /// Estimate accuracy `f`; `(1+f)⁴ ≤ 2` is needed for the split's
    /// guarantees.
    pub f: f64,
    /// Global vertex count for `log n` when running on a piece of a larger
    /// network.
    pub n_hint: Option<usize>,
}

impl Default for LowDiamConfig {
    fn default() -> Self {
        LowDiamConfig { k: 10.0, f: 3.0 / 16.0, n_hint: None }
    }
}

/// Result of [`low_diam_decomposition`].
#[derive(Clone, Debug, Serialize)]
pub struct LowDiamOutcome {
    /// Vertex sets, each sorted, ordered by smallest member.
    pub components: Vec<Vec<VertexId>>,
    pub cut_edges: Vec<(VertexId, VertexId)>,
    /// Largest diameter of a component's induced subgraph.
    pub max_diameter: usize,
    /// `2(d₁ + 1) + 20ab` with `d₁ = 4 log₂ n / β'`, `β' = β/3`.
    pub diameter_bound: f64,
    pub rounds: u64,
    pub split: DenseSparseSplit,
    pub clustering: Clustering,
}

/// Splits `g` into connected pieces of diameter `O(log² n / β²)` by
/// removing at most `β|E|` edges with high probability.
pub fn low_diam_decomposition(
    net: &mut Network,
    g: &Graph,
    beta: f64,
    cfg: &LowDiamConfig,
    rng: &mut Rng,
) -> Result<LowDiamOutcome> {
    check_beta(beta)?;
    let n = cfg.n_hint.unwrap_or(g.n()).max(g.n());
    let inner = beta / 3.0;
    let before = net.ledger().total().rounds;
    let params = SplitParams::new(inner, cfg.k, cfg.f, n)?;
    let split = net.phase("split", |net| dense_sparse_split(net, g, &params, rng))?;
    let clustering = exp_shift_clustering(net, g, inner, n, rng)?;

    let cut_edges: Vec<(VertexId, VertexId)> = clustering
        .inter_cluster_edges(g)
        .into_iter()
        .filter(|&(u, v)| !split.dense[u] || !split.dense[v])
        .collect();
    let kept = Graph::from_edges(
        g.n(),
        g.edges().filter(|&(u, v)| split.dense[u] && split.dense[v] || clustering.label[u] == clustering.label[v]),
    )?;
    let components = kept.connected_components();
    let max_diameter = components.iter().map(|c| split::induced_diameter(g, c)).max().unwrap_or(0);
    let d1 = 4.0 * (n.max(2) as f64).log2() / inner;
    let diameter_bound = 2.0 * (d1 + 1.0) + 20.0 * params.a as f64 * params.b;
    let rounds = net.ledger().total().rounds - before;
    Ok(LowDiamOutcome { components, cut_edges, max_diameter, diameter_bound, rounds, split, clustering })
}
