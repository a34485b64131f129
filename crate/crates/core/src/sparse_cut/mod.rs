//! Sparse cuts from truncated random walks.
//!
//! [`nibble`] holds the single-walk procedures and [`parallel`] the
//! multi-instance ones. [`nearly_balanced_sparse_cut`] is the entry point
//! used by the decomposition: given a target conductance `θ` it picks the
//! walk parameter `φ'` with `f(φ') = θ`, runs Partition and keeps the
//! result only if its conductance is within `h(θ)`.

pub mod nibble;
pub mod parallel;

use serde::{Deserialize, Serialize};

pub use nibble::{approximate_nibble, approximate_nibble_reference, jx_sequence, nibble, NibbleRun, SweepCandidate};
pub use parallel::{
    parallel_nibble, partition, random_nibble, sample_b, InstanceSummary, ParallelNibbleParams, ParallelOutcome,
    PartitionOutcome, RandomNibbleOutcome,
};

use crate::congest::{bfs_tree, Network, Tree};
use crate::error::{Error, Result};
use crate::graph::{Cut, Graph, Subgraph, VertexId};
use crate::rng::Rng;
use crate::walks::{Profile, WalkConstants};

/// The communication side of a cut computation: the host graph and a BFS
/// tree over the part of it the computation may use.
#[derive(Clone, Debug)]
pub struct Host<'a> {
    pub graph: &'a Graph,
    pub tree: Tree,
}

impl<'a> Host<'a> {
    /// Builds a BFS tree of `graph` restricted to `vertices`, rooted at the
    /// smallest of them.
    pub fn build(net: &mut Network, graph: &'a Graph, vertices: &[VertexId]) -> Result<Self> {
        let root = *vertices.iter().min().ok_or_else(|| Error::BadParameter("empty host".into()))?;
        let mut inside = vec![false; graph.n()];
        for &v in vertices {
            *inside.get_mut(v).ok_or(Error::UnknownVertex(v))? = true;
        }
        let tree = net.phase("host_bfs", |net| bfs_tree(net, graph, root, |u, v| inside[u] && inside[v]))?;
        Ok(Host { graph, tree })
    }
}

/// Tunables of the sparse-cut stack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CutConfig {
    pub profile: Profile,
    pub constants: WalkConstants,
    /// `c_k` in the instance count `k = ⌈Vol / (c_k ℓ (t₀+1) t₀ L / φ)⌉`.
    pub instance_constant: f64,
    /// Upper clamp on `k`.
    pub max_instances: Option<u64>,
    /// Upper clamp on Partition's iteration count `s`.
    pub max_iterations: Option<u64>,
    /// Lower clamp on the internal walk parameter `φ'`.
    pub phi_floor: f64,
    /// `C_H` in `h(θ) = C_H θ^{1/3} (log₂ n)^{5/3}`.
    pub c_h: f64,
    /// Failure probability for Partition; `1/n²` when unset.
    pub p: Option<f64>,
    /// Vertex count of the whole network, for `log n` and the default `p`
    /// when the communication graph is only a piece of it.
    pub n_hint: Option<usize>,
}

impl CutConfig {
    pub fn paper() -> Self {
        CutConfig {
            profile: Profile::Paper,
            constants: WalkConstants::PAPER,
            instance_constant: 56.0,
            max_instances: None,
            max_iterations: None,
            phi_floor: 0.0,
            c_h: 1.0,
            p: None,
            n_hint: None,
        }
    }

    pub fn desk() -> Self {
        CutConfig {
            profile: Profile::Desk,
            constants: WalkConstants::DESK,
            instance_constant: 1e-9,
            max_instances: Some(8),
            max_iterations: Some(8),
            phi_floor: 1.0 / 24.0,
            c_h: 1.0,
            p: None,
            n_hint: None,
        }
    }

    pub fn for_profile(profile: Profile) -> Self {
        match profile {
            Profile::Paper => Self::paper(),
            Profile::Desk => Self::desk(),
        }
    }
}

impl Default for CutConfig {
    fn default() -> Self {
        Self::desk()
    }
}

/// `h(θ) = C_H · θ^{1/3} · (log₂ n)^{5/3}` and its inverse.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HFunction {
    pub c_h: f64,
    pub n: usize,
}

impl HFunction {
    fn scale(&self) -> f64 {
        self.c_h * (self.n.max(2) as f64).log2().powf(5.0 / 3.0)
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.scale() * theta.cbrt()
    }

    pub fn inverse(&self, x: f64) -> f64 {
        (x / self.scale()).powi(3)
    }
}

/// A cut problem: find a sparse cut of the working graph `G{W}` using the
/// links among `comm_vertices` of `comm` for coordination.
#[derive(Clone, Copy, Debug)]
pub struct CutProblem<'a> {
    pub comm: &'a Graph,
    /// Must contain every vertex of the working graph.
    pub comm_vertices: &'a [VertexId],
    /// Working graph with IDs of `comm`.
    pub work: &'a Subgraph,
}

impl<'a> CutProblem<'a> {
    /// The whole of `g`, communicating over all of it.
    pub fn whole(g: &'a Graph, all: &'a [VertexId], work: &'a Subgraph) -> Self {
        CutProblem { comm: g, comm_vertices: all, work }
    }
}

/// Result of [`nearly_balanced_sparse_cut`].
#[derive(Clone, Debug)]
pub struct BalancedCut {
    /// The cut, with original IDs and statistics in the working graph.
    pub cut: Option<Cut>,
    pub phi_target: f64,
    /// Walk parameter `φ'` Partition ran with.
    pub phi_internal: f64,
    pub p: f64,
    /// `h(θ)`: any returned cut has conductance at most this.
    pub h_bound: f64,
    /// Partition found a cut that exceeded `h(θ)` and it was dropped.
    pub filtered: bool,
    /// `K_Φ = 47 · 276 · w / log₂|V|` for the largest `w` used.
    pub k_phi: f64,
    pub partition: PartitionOutcome,
}

/// The `φ'` with `f(φ') = θ` for a working graph with `m` walk edges,
/// clamped to `[floor, 1/12]`.
pub fn internal_phi(theta: f64, m: u64, cfg: &CutConfig) -> f64 {
    let l = (m.max(1) as f64).ln() + 4.0;
    (theta * cfg.constants.f * l * l).cbrt().clamp(cfg.phi_floor.min(1.0 / 12.0), 1.0 / 12.0)
}

/// Finds a cut of conductance at most `h(θ)` that is nearly as balanced as
/// the most balanced cut of conductance `θ`, or reports that none was found.
pub fn nearly_balanced_sparse_cut(
    net: &mut Network,
    problem: CutProblem<'_>,
    theta: f64,
    cfg: &CutConfig,
    rng: &mut Rng,
) -> Result<BalancedCut> {
    let n = cfg.n_hint.unwrap_or(0).max(problem.comm.n());
    let log_n = (n.max(2) as f64).log2();
    if !(theta > 0.0) || theta > 1.0 || (cfg.profile == Profile::Paper && theta > log_n.powi(-5)) {
        return Err(Error::BadPhi(theta));
    }
    let work = problem.work;
    let m = parallel::walk_edges(&work.graph);
    let phi = internal_phi(theta, m, cfg);
    let p = cfg.p.unwrap_or(1.0 / (n.max(2) as f64).powi(2));
    let h_bound = HFunction { c_h: cfg.c_h, n }.eval(theta);
    let host = Host::build(net, problem.comm, problem.comm_vertices)?;
    let part = net.phase("partition", |net| partition(net, &host, work, phi, p, cfg, rng))?;
    let k_phi = 47.0 * 276.0 * part.w_max as f64 / (work.graph.n().max(2) as f64).log2();
    let mut filtered = false;
    let cut = match Cut::new(&work.graph, &part.cut) {
        Ok(c) if c.conductance_as::<f64>() <= h_bound => Some(c.relabel(&work.ids)),
        Ok(_) => {
            filtered = true;
            None
        }
        Err(_) => None,
    };
    Ok(BalancedCut { cut, phi_target: theta, phi_internal: phi, p, h_bound, filtered, k_phi, partition: part })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::barbell;
    use crate::rng::seeded;

    #[test]
    fn h_inverse_round_trips() {
        let h = HFunction { c_h: 0.7, n: 300 };
        for theta in [1e-9, 1e-5, 0.01, 0.3] {
            assert!((h.eval(h.inverse(theta)) - theta).abs() <= 1e-9);
            assert!((h.inverse(h.eval(theta)) - theta).abs() <= 1e-9 * theta.max(1e-3));
        }
        assert!(h.eval(0.2) > h.eval(0.1));
    }

    #[test]
    fn paper_profile_caps_theta() {
        let g = barbell(4, 1).unwrap();
        let all: Vec<_> = (0..g.n()).collect();
        let sub = g.contract(&all);
        let mut net = Network::for_graph(&g);
        let err = nearly_balanced_sparse_cut(&mut net, CutProblem::whole(&g, &all, &sub), 0.01, &CutConfig::paper(), &mut seeded(0));
        assert!(matches!(err, Err(Error::BadPhi(_))));
    }

    #[test]
    fn barbell_cut_is_balanced() {
        let g = barbell(12, 1).unwrap();
        let all: Vec<_> = (0..g.n()).collect();
        let sub = g.contract(&all);
        let theta = 1e-6;
        let mut found = 0;
        for seed in 0..10 {
            let mut net = Network::for_graph(&g).with_backend(crate::congest::Backend::Charged);
            let out =
                nearly_balanced_sparse_cut(&mut net, CutProblem::whole(&g, &all, &sub), theta, &CutConfig::desk(), &mut seeded(seed))
                    .unwrap();
            if let Some(c) = out.cut {
                found += 1;
                assert!(c.conductance_as::<f64>() <= out.h_bound);
            }
        }
        assert!(found >= 7, "{found}");
    }
}
