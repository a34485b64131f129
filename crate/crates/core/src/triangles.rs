//! Triangle enumeration driven by expander decompositions.
//!
//! Each level decomposes the current edge set, lets every component list
//! the triangles that use at least one of its internal edges, and passes
//! the inter-component edges `E*` on to the next level. A triangle whose
//! three edges are all in `E*` is found deeper down; any other triangle has
//! an internal edge somewhere and is found at this level.
//!
//! Inside a component the work is split in the usual bucket-triple way:
//! the component and its outside neighbors are cut into `g = ⌈|V_i|^{1/3}⌉`
//! buckets by ID, every multiset of three buckets goes to one member, and
//! that member receives every edge running between its buckets. Delivery
//! goes through a [`Router`] that only counts batches; its rounds come from
//! an analytic cost model rather than a routing structure.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::congest::{Network, ID_BITS};
use crate::error::{Error, Result};
use crate::expander::{expander_decomposition, DecompConfig};
use crate::graph::{mixing_time_estimate, Graph, VertexId};
use crate::rng::Rng;

/// Largest graph accepted by [`brute_force_triangles`].
pub const BRUTE_FORCE_MAX: usize = 2000;

/// A triangle as its vertices in ascending order.
pub type Triangle = [VertexId; 3];

/// Every triangle of `g`, sorted, by intersecting sorted neighbor lists.
pub fn brute_force_triangles(g: &Graph) -> Result<Vec<Triangle>> {
    if g.n() > BRUTE_FORCE_MAX {
        return Err(Error::TooLarge { n: g.n(), max: BRUTE_FORCE_MAX });
    }
    let mut out = Vec::new();
    for u in 0..g.n() {
        let nu = g.neighbors(u);
        for &v in nu.iter().filter(|&&v| v > u) {
            let nv = g.neighbors(v);
            let (mut i, mut j) = (0, 0);
            while i < nu.len() && j < nv.len() {
                match nu[i].cmp(&nv[j]) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        if nu[i] > v {
                            out.push([u, v, nu[i]]);
                        }
                        i += 1;
                        j += 1;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// How requests are delivered.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteStrategy {
    /// Every payload goes straight to its destination.
    #[default]
    Direct,
}

/// Cost model of the router: a batch on a component with mixing time
/// `τ` costs `C_R · τ · (log₂ n)^{c_q}` rounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RouterConfig {
    pub strategy: RouteStrategy,
    pub c_r: f64,
    pub c_q: f64,
    /// L1 distance to stationarity that counts as mixed.
    pub mixing_tol: f64,
    /// Recorded constant of the `τ ≤ C_m · log₂ n / Φ²` comparison.
    pub c_m: f64,
}

impl Default for RouterConfig {
    fn default() -> Self {
        RouterConfig { strategy: RouteStrategy::Direct, c_r: 1.0, c_q: 1.0, mixing_tol: 0.25, c_m: 1.0 }
    }
}

/// One payload to move from `source` to `destination`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Request<P> {
    pub source: VertexId,
    pub destination: VertexId,
    pub payload: P,
}

/// Payloads grouped by destination, and the number of batches needed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Delivery<P> {
    pub inbox: BTreeMap<VertexId, Vec<P>>,
    /// A batch lets each vertex `v` send and receive `deg(v)` payloads.
    pub batches: u64,
    pub requests: u64,
}

/// Delivers request sets inside one component.
#[derive(Clone, Debug, PartialEq)]
pub struct Router {
    pub config: RouterConfig,
    /// `log₂ n` of the whole network.
    pub log_n: f64,
}

impl Router {
    pub fn new(config: RouterConfig, n: usize) -> Self {
        Router { config, log_n: (n.max(2) as f64).log2() }
    }

    /// Rounds of one batch on a component with mixing time `tau_mix`.
    pub fn batch_rounds(&self, tau_mix: usize) -> u64 {
        (self.config.c_r * tau_mix.max(1) as f64 * self.log_n.powf(self.config.c_q)).ceil() as u64
    }

    /// Hands every payload to its destination exactly once. `degree` gives
    /// the per-batch budget of each endpoint.
    pub fn deliver<P>(&self, requests: Vec<Request<P>>, degree: impl Fn(VertexId) -> u64) -> Delivery<P> {
        let mut load: BTreeMap<VertexId, u64> = BTreeMap::new();
        let mut inbox: BTreeMap<VertexId, Vec<P>> = BTreeMap::new();
        let count = requests.len() as u64;
        for r in requests {
            *load.entry(r.source).or_default() += 1;
            *load.entry(r.destination).or_default() += 1;
            inbox.entry(r.destination).or_default().push(r.payload);
        }
        let batches = load.iter().map(|(&v, &l)| l.div_ceil(degree(v).max(1))).max().unwrap_or(0);
        Delivery { inbox, batches, requests: count }
    }
}

/// Routing cost of one component at one level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentRouting {
    pub size: usize,
    pub internal_edges: usize,
    pub boundary_edges: usize,
    /// Number of buckets `g`.
    pub buckets: usize,
    pub triples: usize,
    pub tau_mix: usize,
    pub batches: u64,
    pub rounds: u64,
}

/// Triangles a component is responsible for, with their reporters.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentTriangles {
    pub found: Vec<(Triangle, VertexId)>,
    pub routing: ComponentRouting,
}

/// Lists every triangle of `g` with at least one edge inside `members`.
///
/// `members` must be sorted. The reporter of a triangle is the member that
/// was assigned its bucket triple; it need not be a corner. Rounds are
/// charged to `net` as `batches · Q(τ_mix, n)`.
pub fn enumerate_component(
    net: &mut Network,
    g: &Graph,
    members: &[VertexId],
    router: &Router,
) -> Result<ComponentTriangles> {
    let inside = |v: VertexId| members.binary_search(&v).is_ok();
    let mut internal = Vec::new();
    let mut boundary = Vec::new();
    for &u in members {
        for &w in g.neighbors(u) {
            if !inside(w) {
                boundary.push((u, w));
            } else if u < w {
                internal.push((u, w));
            }
        }
    }
    let mut routing = ComponentRouting {
        size: members.len(),
        internal_edges: internal.len(),
        boundary_edges: boundary.len(),
        buckets: 0,
        triples: 0,
        tau_mix: 0,
        batches: 0,
        rounds: 0,
    };
    if internal.is_empty() {
        return Ok(ComponentTriangles { found: Vec::new(), routing });
    }

    // Buckets over the component and its outside neighbors, by ID rank.
    let pool: Vec<VertexId> =
        members.iter().copied().chain(boundary.iter().map(|&(_, w)| w)).collect::<BTreeSet<_>>().into_iter().collect();
    let buckets = (members.len() as f64).cbrt().ceil() as usize;
    let bucket = |v: VertexId| pool.binary_search(&v).expect("pool vertex") * buckets / pool.len();
    let mut triples = Vec::new();
    for a in 0..buckets {
        for b in a..buckets {
            for c in b..buckets {
                triples.push([a, b, c]);
            }
        }
    }

    // Least relative load first, ties by ID.
    let mut assigned: Vec<usize> = vec![0; members.len()];
    let mut owner = Vec::with_capacity(triples.len());
    for _ in &triples {
        let i = (0..members.len())
            .min_by(|&x, &y| {
                let lx = assigned[x] as f64 / g.degree(members[x]).max(1) as f64;
                let ly = assigned[y] as f64 / g.degree(members[y]).max(1) as f64;
                lx.total_cmp(&ly).then(x.cmp(&y))
            })
            .expect("component is non-empty");
        assigned[i] += 1;
        owner.push(members[i]);
    }

    // An internal edge is sent by its smaller endpoint, a boundary edge by
    // its endpoint in the component.
    let mut requests = Vec::new();
    let edges = internal.iter().map(|&e| (e, true)).chain(boundary.iter().map(|&e| (e, false)));
    for ((u, w), is_internal) in edges {
        let (bu, bw) = (bucket(u), bucket(w));
        for (t, tri) in triples.iter().enumerate() {
            if covers(tri, bu, bw) {
                requests.push(Request { source: u, destination: owner[t], payload: (t, u.min(w), u.max(w), is_internal) });
            }
        }
    }
    let delivery = router.deliver(requests, |v| g.degree(v));

    let mut found = Vec::new();
    for (&reporter, payloads) in &delivery.inbox {
        let mut by_triple: BTreeMap<usize, Vec<(VertexId, VertexId, bool)>> = BTreeMap::new();
        for &(t, u, w, is_internal) in payloads {
            by_triple.entry(t).or_default().push((u, w, is_internal));
        }
        for (t, list) in by_triple {
            for tri in local_triangles(&list) {
                let mut key: Vec<usize> = tri.iter().map(|&v| bucket(v)).collect();
                key.sort_unstable();
                if key == triples[t] {
                    found.push((tri, reporter));
                }
            }
        }
    }
    found.sort_unstable();

    let work = g.contract(members);
    routing.buckets = buckets;
    routing.triples = triples.len();
    routing.tau_mix = mixing_time_estimate(&work.graph, router.config.mixing_tol)?;
    routing.batches = delivery.batches;
    routing.rounds = delivery.batches * router.batch_rounds(routing.tau_mix);
    net.charge(routing.rounds, delivery.requests, 2 * ID_BITS)?;
    Ok(ComponentTriangles { found, routing })
}

/// The bucket pair `{a, b}` is a sub-multiset of `tri`.
fn covers(tri: &[usize; 3], a: usize, b: usize) -> bool {
    let count = |x: usize| tri.iter().filter(|&&y| y == x).count();
    if a == b {
        count(a) >= 2
    } else {
        count(a) >= 1 && count(b) >= 1
    }
}

/// Triangles of a received edge list that contain at least one internal
/// edge.
fn local_triangles(edges: &[(VertexId, VertexId, bool)]) -> Vec<Triangle> {
    let mut adj: BTreeMap<VertexId, BTreeMap<VertexId, bool>> = BTreeMap::new();
    for &(u, w, internal) in edges {
        adj.entry(u).or_default().insert(w, internal);
        adj.entry(w).or_default().insert(u, internal);
    }
    let mut out = Vec::new();
    for (&u, nu) in &adj {
        for (&v, &uv) in nu.range(u + 1..) {
            let nv = &adj[&v];
            for (&w, &uw) in nu.range(v + 1..) {
                if let Some(&vw) = nv.get(&w) {
                    if uv || uw || vw {
                        out.push([u, v, w]);
                    }
                }
            }
        }
    }
    out
}

/// Tunables of [`triangle_enumeration`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TriangleConfig {
    pub decomposition: DecompConfig,
    pub router: RouterConfig,
}

/// What one level of the recursion did.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelReport {
    pub level: usize,
    pub edges: usize,
    pub components: usize,
    /// `|E*|` handed to the next level.
    pub inter_edges: usize,
    pub triangles: usize,
    pub decomposition_rounds: u64,
    pub routing: Vec<ComponentRouting>,
}

/// Output of [`triangle_enumeration`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TriangleRun {
    /// Every triangle once, ascending.
    pub triangles: Vec<Triangle>,
    /// The vertex that reported each triangle first, aligned with
    /// `triangles`.
    pub reporters: Vec<VertexId>,
    pub levels: Vec<LevelReport>,
    pub epsilon: f64,
    pub k: usize,
    pub router: RouterConfig,
    /// Rounds charged by the router over all levels.
    pub rounds_charged: u64,
    /// All rounds, decompositions included.
    pub rounds_total: u64,
    pub n: usize,
}

/// Lists all triangles of `g`.
///
/// Requires `ε ≤ 1/6`, so each level keeps at most a sixth of its edges
/// and the recursion is at most `log₆|E| + 1` levels deep.
pub fn triangle_enumeration(
    net: &mut Network,
    g: &Graph,
    epsilon: f64,
    k: usize,
    cfg: &TriangleConfig,
    rng: &mut Rng,
) -> Result<TriangleRun> {
    if !(epsilon > 0.0 && epsilon <= 1.0 / 6.0) {
        return Err(Error::BadEpsilon(epsilon));
    }
    let n = g.n();
    let router = Router::new(cfg.router.clone(), n);
    let depth_bound = if g.m() == 0 { 0 } else { ((g.m() as f64).ln() / 6f64.ln()).floor() as usize + 1 };
    let start_rounds = net.ledger().total().rounds;
    let mut current = g.clone();
    let mut seen: BTreeMap<Triangle, VertexId> = BTreeMap::new();
    let mut levels = Vec::new();
    let mut rounds_charged = 0;
    while current.m() > 0 {
        let level = levels.len() + 1;
        if level > depth_bound {
            return Err(Error::DepthExceeded { depth: level, bound: depth_bound });
        }
        let label = format!("level{level}");
        let before = net.ledger().total().rounds;
        let dec = net.phase(&label, |net| expander_decomposition(net, &current, epsilon, k, &cfg.decomposition, rng))?;
        let decomposition_rounds = net.ledger().total().rounds - before;

        let mut comp_of = vec![0; n];
        for (i, c) in dec.components.iter().enumerate() {
            for &v in c {
                comp_of[v] = i;
            }
        }
        let inter: Vec<(VertexId, VertexId)> = current.edges().filter(|&(u, v)| comp_of[u] != comp_of[v]).collect();

        let jobs: Vec<(&Vec<VertexId>, Network)> = dec.components.iter().map(|c| (c, net.fork())).collect();
        let results: Vec<(Result<ComponentTriangles>, Network)> = jobs
            .into_par_iter()
            .map(|(c, mut inet)| (enumerate_component(&mut inet, &current, c, &router), inet))
            .collect();
        let mut ledgers = Vec::with_capacity(results.len());
        let mut routing = Vec::new();
        let mut count = 0;
        for (res, inet) in results {
            ledgers.push(inet.into_ledger());
            let comp = res?;
            count += comp.found.len();
            for (t, r) in comp.found {
                seen.entry(t).or_insert(r);
            }
            routing.push(comp.routing);
        }
        let level_charge = routing.iter().map(|r| r.rounds).max().unwrap_or(0);
        rounds_charged += level_charge;
        net.phase(&label, |net| net.phase("enumerate", |net| net.absorb_parallel(&ledgers, 1)));

        if inter.len() >= current.m() {
            return Err(Error::BadParameter("inter-component edges did not shrink".into()));
        }
        levels.push(LevelReport {
            level,
            edges: current.m(),
            components: dec.components.len(),
            inter_edges: inter.len(),
            triangles: count,
            decomposition_rounds,
            routing,
        });
        current = Graph::from_edges(n, inter)?;
    }
    let (triangles, reporters) = seen.into_iter().unzip();
    Ok(TriangleRun {
        triangles,
        reporters,
        levels,
        epsilon,
        k,
        router: cfg.router.clone(),
        rounds_charged,
        rounds_total: net.ledger().total().rounds - start_rounds,
        n,
    })
}

/// Router cost of one level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelCost {
    pub level: usize,
    pub tau_mix: Vec<usize>,
    pub batches: Vec<u64>,
    pub rounds: Vec<u64>,
    /// Components run concurrently, so the level costs the largest charge.
    pub level_rounds: u64,
    pub max_buckets: usize,
}

/// Summary of the router charges of a run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RouterCostReport {
    pub levels: Vec<LevelCost>,
    pub c_r: f64,
    pub c_q: f64,
    pub c_m: f64,
    pub total_rounds: u64,
}

pub fn router_cost_report(run: &TriangleRun) -> RouterCostReport {
    let levels: Vec<LevelCost> = run
        .levels
        .iter()
        .map(|l| LevelCost {
            level: l.level,
            tau_mix: l.routing.iter().map(|r| r.tau_mix).collect(),
            batches: l.routing.iter().map(|r| r.batches).collect(),
            rounds: l.routing.iter().map(|r| r.rounds).collect(),
            level_rounds: l.routing.iter().map(|r| r.rounds).max().unwrap_or(0),
            max_buckets: l.routing.iter().map(|r| r.buckets).max().unwrap_or(0),
        })
        .collect();
    let total_rounds = levels.iter().map(|l| l.level_rounds).sum();
    RouterCostReport { levels, c_r: run.router.c_r, c_q: run.router.c_q, c_m: run.router.c_m, total_rounds }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::congest::Backend;
    use crate::generators::{clique, cycle, erdos_renyi, planted_clique};
    use crate::graph::min_conductance_oracle;
    use crate::rng::seeded;

    fn matrix_trace_count(g: &Graph) -> u64 {
        let n = g.n();
        let a: Vec<Vec<u64>> = (0..n).map(|u| (0..n).map(|v| g.has_edge(u, v) as u64).collect()).collect();
        let mul = |x: &Vec<Vec<u64>>, y: &Vec<Vec<u64>>| -> Vec<Vec<u64>> {
            (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| x[i][k] * y[k][j]).sum()).collect()).collect()
        };
        let a3 = mul(&mul(&a, &a), &a);
        (0..n).map(|i| a3[i][i]).sum::<u64>() / 6
    }

    #[test]
    fn brute_force_examples() {
        assert_eq!(brute_force_triangles(&clique(4)).unwrap().len(), 4);
        assert!(brute_force_triangles(&cycle(6)).unwrap().is_empty());
        let g = erdos_renyi(30, 0.5, &mut seeded(3)).unwrap();
        assert_eq!(brute_force_triangles(&g).unwrap().len() as u64, matrix_trace_count(&g));
        assert!(matches!(brute_force_triangles(&Graph::empty(2001)), Err(Error::TooLarge { .. })));
    }

    fn net(g: &Graph) -> Network {
        Network::for_graph(g).with_backend(Backend::Charged)
    }

    #[test]
    fn component_lists_its_triangles() {
        let g = clique(4);
        let router = Router::new(RouterConfig::default(), 4);
        let c = enumerate_component(&mut net(&g), &g, &[0, 1, 2, 3], &router).unwrap();
        let tris: Vec<Triangle> = c.found.iter().map(|f| f.0).collect();
        assert_eq!(tris, brute_force_triangles(&g).unwrap());
    }

    #[test]
    fn boundary_triangle_is_reported_by_the_edge() {
        let g = Graph::from_edges(3, [(0, 1), (0, 2), (1, 2)]).unwrap();
        let router = Router::new(RouterConfig::default(), 3);
        let c = enumerate_component(&mut net(&g), &g, &[0, 1], &router).unwrap();
        assert_eq!(c.found.len(), 1);
        assert_eq!(c.found[0].0, [0, 1, 2]);
        assert!(c.found[0].1 <= 1);
        let lone = enumerate_component(&mut net(&g), &g, &[2], &router).unwrap();
        assert!(lone.found.is_empty());
    }

    #[test]
    fn components_cover_all_but_fully_inter_triangles() {
        let g = erdos_renyi(40, 0.3, &mut seeded(11)).unwrap();
        let mut nw = net(&g);
        let dec = expander_decomposition(&mut nw, &g, 1.0 / 6.0, 2, &DecompConfig::default(), &mut seeded(2)).unwrap();
        let router = Router::new(RouterConfig::default(), g.n());
        let mut comp_of = vec![0; g.n()];
        for (i, c) in dec.components.iter().enumerate() {
            for &v in c {
                comp_of[v] = i;
            }
        }
        let mut union = BTreeSet::new();
        for c in &dec.components {
            for (t, _) in enumerate_component(&mut nw, &g, c, &router).unwrap().found {
                union.insert(t);
            }
        }
        let expected: BTreeSet<Triangle> = brute_force_triangles(&g)
            .unwrap()
            .into_iter()
            .filter(|&[a, b, c]| comp_of[a] == comp_of[b] || comp_of[b] == comp_of[c] || comp_of[a] == comp_of[c])
            .collect();
        assert_eq!(union, expected);
    }

    fn run(g: &Graph, seed: u64) -> TriangleRun {
        triangle_enumeration(&mut net(g), g, 1.0 / 6.0, 2, &TriangleConfig::default(), &mut seeded(seed)).unwrap()
    }

    #[test]
    fn matches_oracle() {
        for seed in 0..3 {
            let g = erdos_renyi(30, 0.3, &mut seeded(seed)).unwrap();
            let r = run(&g, seed);
            assert_eq!(r.triangles, brute_force_triangles(&g).unwrap());
            assert_eq!(r.reporters.len(), r.triangles.len());
        }
        assert!(run(&cycle(9), 0).triangles.is_empty());
    }

    #[test]
    fn planted_clique_is_found() {
        let g = planted_clique(40, 0.05, 10, &mut seeded(5)).unwrap();
        let r = run(&g, 1);
        let set: BTreeSet<Triangle> = r.triangles.iter().copied().collect();
        let clique_tris = brute_force_triangles(&g).unwrap().into_iter().filter(|t| t.iter().all(|&v| v < 10)).count();
        assert_eq!(clique_tris, 120);
        assert_eq!(set, brute_force_triangles(&g).unwrap().into_iter().collect());
    }

    #[test]
    fn router_report() {
        let g = clique(16);
        let r = run(&g, 0);
        let rep = router_cost_report(&r);
        assert_eq!(rep.levels.len(), 1);
        let tau = rep.levels[0].tau_mix[0];
        let (phi, _) = min_conductance_oracle(&g).unwrap();
        let phi = *phi.numer() as f64 / *phi.denom() as f64;
        assert!((phi - 8.0 / 15.0).abs() < 1e-12);
        assert!(tau >= 1 && tau as f64 <= rep.c_m * 4.0 / (phi * phi), "{tau}");
        let n = 16f64;
        assert!(rep.levels[0].batches[0] as f64 <= 2.0 * n.cbrt() * n.log2());
        assert_eq!(rep.total_rounds, r.rounds_charged);

        let empty = run(&Graph::empty(5), 0);
        let rep = router_cost_report(&empty);
        assert!(rep.levels.is_empty());
        assert_eq!(rep.total_rounds, 0);
    }

    #[test]
    fn router_delivers_each_request_once() {
        let router = Router::new(RouterConfig::default(), 8);
        let reqs: Vec<Request<usize>> = (0..6).map(|i| Request { source: i % 2, destination: 5, payload: i }).collect();
        let d = router.deliver(reqs, |_| 2);
        assert_eq!(d.inbox[&5], vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(d.batches, 3);
    }
}
