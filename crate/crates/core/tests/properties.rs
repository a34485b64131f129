//! Randomized invariants over small graphs.

use std::collections::BTreeSet;

use num_traits::{One, Zero};
use proptest::prelude::*;

use expander_core::congest::search::IdKey;
use expander_core::congest::{bfs_tree, random_binary_search, Backend, Network, Outbox};
use expander_core::expander::{expander_decomposition, Channel, DecompConfig};
use expander_core::generators::GraphSpec;
use expander_core::graph::min_conductance_oracle;
use expander_core::low_diam::{dense_sparse_split, exp_shift_clustering, low_diam_decomposition, LowDiamConfig, SplitParams};
use expander_core::rng::seeded;
use expander_core::sparse_cut::{
    approximate_nibble, approximate_nibble_reference, nearly_balanced_sparse_cut, parallel_nibble, partition, CutConfig,
    CutProblem, Host, ParallelNibbleParams,
};
use expander_core::triangles::{brute_force_triangles, triangle_enumeration, TriangleConfig};
use expander_core::walks::{derive_nibble_params, derive_nibble_params_with, lazy_step, Profile, TruncatedWalk};
use expander_core::{Fixed, Graph, Rational, Scalar};

/// A graph on `lo..=hi` vertices with each pair present independently.
fn any_graph(lo: usize, hi: usize) -> impl Strategy<Value = Graph> {
    (lo..=hi).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
            let pairs = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
            Graph::from_edges(n, pairs.zip(bits).filter(|(_, b)| *b).map(|(e, _)| e)).unwrap()
        })
    })
}

/// A path through all vertices plus random chords, so always connected.
fn connected_graph(lo: usize, hi: usize) -> impl Strategy<Value = Graph> {
    any_graph(lo, hi).prop_map(|g| {
        let n = g.n();
        let edges: BTreeSet<(usize, usize)> = g.edges().chain((1..n).map(|v| (v - 1, v))).collect();
        Graph::from_edges(n, edges).unwrap()
    })
}

fn all(g: &Graph) -> Vec<usize> {
    (0..g.n()).collect()
}

fn subset(n: usize, mask: u32) -> Vec<usize> {
    (0..n).filter(|&v| mask >> v & 1 == 1).collect()
}

fn point(n: usize, v: usize) -> Vec<Rational> {
    let mut p = vec![Rational::zero(); n];
    p[v] = Rational::one();
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn loops_never_raise_conductance(g in any_graph(2, 9), mask in any::<u32>()) {
        let s = subset(g.n(), mask);
        prop_assume!(s.len() >= 2);
        if let Ok((induced, _)) = min_conductance_oracle(&g.induced(&s).graph) {
            let (contracted, _) = min_conductance_oracle(&g.contract(&s).graph).unwrap();
            prop_assert!(contracted <= induced);
        }
    }

    #[test]
    fn removal_and_contraction_keep_degrees(g in any_graph(2, 10), picks in proptest::collection::vec(any::<usize>(), 0..6), mask in any::<u32>()) {
        let mut h = g.clone();
        let edges: Vec<_> = g.edges().collect();
        for p in picks {
            if edges.is_empty() {
                break;
            }
            let (u, v) = edges[p % edges.len()];
            if h.has_edge(u, v) {
                h.remove_edge_to_loops(u, v).unwrap();
            }
        }
        for v in 0..g.n() {
            prop_assert_eq!(h.degree(v), g.degree(v));
        }
        let s = subset(g.n(), mask);
        let sub = h.contract(&s);
        for (local, &v) in sub.ids.iter().enumerate() {
            prop_assert_eq!(sub.graph.degree(local), g.degree(v));
        }
    }

    #[test]
    fn conductance_is_symmetric(g in any_graph(2, 10), mask in any::<u32>()) {
        let s = subset(g.n(), mask);
        let rest: Vec<usize> = (0..g.n()).filter(|v| !s.contains(v)).collect();
        if let (Ok(a), Ok(b)) = (g.cut_stats(&s), g.cut_stats(&rest)) {
            prop_assert_eq!(a.conductance(), b.conductance());
            prop_assert_eq!(a.boundary(), b.boundary());
        }
    }

    #[test]
    fn oracle_is_the_enumerated_minimum(g in any_graph(2, 8)) {
        let n = g.n();
        let best = (1u32..1 << n).filter_map(|m| g.cut_stats(&subset(n, m)).ok()).map(|c| c.conductance()).min();
        match min_conductance_oracle(&g) {
            Ok((phi, cut)) => {
                prop_assert_eq!(Some(phi), best);
                prop_assert_eq!(cut.conductance(), phi);
            }
            Err(_) => prop_assert_eq!(best, None),
        }
    }

    #[test]
    fn round_messages_are_simultaneous(g in any_graph(1, 10), values in proptest::collection::vec(0u64..1000, 10)) {
        let n = g.n();
        let mut states = values[..n].to_vec();
        let mut net = Network::for_graph(&g);
        net.round(
            &g,
            &mut states,
            &all(&g),
            |v, s: &mut u64, out: &mut Outbox<u64>| {
                for &w in g.neighbors(v) {
                    out.send(w, *s);
                }
            },
            |_, s, _, m| *s += m,
        )
        .unwrap();
        for v in 0..n {
            let expected = values[v] + g.neighbors(v).iter().map(|&w| values[w]).sum::<u64>();
            prop_assert_eq!(states[v], expected);
        }
    }

    #[test]
    fn binary_search_finds_the_threshold(keys in proptest::collection::btree_set(0usize..10_000, 1..400), cut in 0usize..10_000, seed in any::<u64>()) {
        let g = Graph::from_edges(6, (1..6).map(|v| (v - 1, v))).unwrap();
        let mut net = Network::for_graph(&g).with_backend(Backend::Charged);
        let tree = bfs_tree(&mut net, &g, 0, |_, _| true).unwrap();
        let mut elements = vec![Vec::new(); tree.size()];
        for (i, &k) in keys.iter().enumerate() {
            elements[i % tree.size()].push(IdKey(k));
        }
        let out = random_binary_search(&mut net, &g, &tree, &elements, None, &mut seeded(seed), |_, k| Ok(k.0 <= cut)).unwrap();
        prop_assert_eq!(out.boundary.map(|k| k.0), keys.range(..=cut).next_back().copied());
        prop_assert!(out.iterations as f64 <= 40.0 * (keys.len().max(2) as f64).log2());
    }

    #[test]
    fn lazy_walk_is_reversible(g in connected_graph(2, 8), t in 1usize..8) {
        let n = g.n();
        let walks: Vec<Vec<Rational>> = (0..n)
            .map(|v| (0..t).fold(point(n, v), |p, _| lazy_step(&g, &p)))
            .collect();
        for u in 0..n {
            for v in 0..n {
                prop_assert_eq!(walks[v][u].div_int(g.degree(u)), walks[u][v].div_int(g.degree(v)));
            }
        }
    }

    #[test]
    fn truncation_only_removes_mass(g in connected_graph(2, 9), v in any::<usize>(), eps in 0.001f64..0.2) {
        let n = g.n();
        let v = v % n;
        let mut walk = TruncatedWalk::<Rational>::new(&g, v, eps);
        let mut exact = point(n, v);
        let mut mass = Rational::one();
        for _ in 0..10 {
            walk.step_central();
            exact = lazy_step(&g, &exact);
            let state = walk.state();
            for u in 0..n {
                prop_assert!(state.mass[u] <= exact[u]);
            }
            let now = state.total_mass();
            prop_assert!(now <= mass);
            mass = now;
        }
    }

    #[test]
    fn fixed_point_tracks_exact_walk(g in connected_graph(2, 12), v in any::<usize>()) {
        let n = g.n();
        let v = v % n;
        let mut exact = point(n, v);
        let mut fixed = vec![Fixed::zero(); n];
        fixed[v] = Fixed::one();
        for t in 1..=40u32 {
            exact = lazy_step(&g, &exact);
            fixed = lazy_step(&g, &fixed);
            for u in 0..n {
                let gap = (exact[u].as_f64() - fixed[u].as_f64()).abs();
                prop_assert!(gap <= f64::from(t) * 2f64.powi(-40), "t {} vertex {} gap {}", t, u, gap);
            }
        }
    }

    #[test]
    fn generators_are_deterministic(n in 3usize..40, p in 0.0f64..1.0, seed in any::<u64>()) {
        let spec = GraphSpec::ErdosRenyi { n, p };
        prop_assert_eq!(spec.generate(seed).unwrap(), spec.generate(seed).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn balanced_cut_is_valid(g in connected_graph(4, 16), phi in 0.01f64..0.2, seed in any::<u64>()) {
        let vs = all(&g);
        let work = g.contract(&vs);
        let mut net = Network::for_graph(&g).with_backend(Backend::Charged);
        let res = nearly_balanced_sparse_cut(&mut net, CutProblem::whole(&g, &vs, &work), phi, &CutConfig::default(), &mut seeded(seed)).unwrap();
        if let Some(cut) = res.cut {
            prop_assert!(!cut.is_empty() && cut.len() < g.n());
            prop_assert_eq!(&g.cut_stats(cut.members()).unwrap(), &cut);
            prop_assert!(cut.conductance_as::<f64>() <= res.h_bound);
        }
    }

    #[test]
    fn parallel_nibble_and_partition_bounds(g in connected_graph(4, 16), seed in any::<u64>()) {
        let vs = all(&g);
        let sub = g.contract(&vs);
        let cfg = CutConfig { max_instances: Some(6), ..CutConfig::default() };
        let params = derive_nibble_params_with(g.m() as u64, 1.0 / 12.0, cfg.profile, cfg.constants).unwrap();
        let pp = ParallelNibbleParams::derive(g.total_volume(), &params, &cfg, 0.25);
        let mut net = Network::for_graph(&g).with_backend(Backend::Charged);
        let host = Host::build(&mut net, &g, &vs).unwrap();
        let out = parallel_nibble(&mut net, &host, &sub, &params, &pp, &mut seeded(seed)).unwrap();
        if !out.overflow {
            prop_assert!(out.max_participation <= pp.w);
        }
        prop_assert!(pp.within_z(g.volume(&out.cut)));

        let part = partition(&mut net, &host, &sub, 1.0 / 12.0, 0.25, &cfg, &mut seeded(seed)).unwrap();
        let mut seen = BTreeSet::new();
        for c in &part.parts {
            for &v in c {
                prop_assert!(seen.insert(v), "vertex {} in two parts", v);
            }
        }
        prop_assert_eq!(seen.into_iter().collect::<Vec<_>>(), { let mut c = part.cut.clone(); c.sort(); c });
    }

    #[test]
    fn approximate_nibble_matches_reference(g in connected_graph(3, 14), v in any::<usize>(), b in 1u32..6, phi in prop::sample::select(vec![0.05, 0.1, 0.2]), seed in any::<u64>()) {
        let p = derive_nibble_params(g.m() as u64, phi, Profile::Desk).unwrap();
        let v = v % g.n();
        let b = 1 + (b - 1) % p.ell;
        let mut net = Network::for_graph(&g).with_backend(Backend::Charged);
        let run = approximate_nibble(&mut net, &g, v, b, &p, &mut seeded(seed)).unwrap();
        let reference = approximate_nibble_reference::<Fixed>(&g, v, b, &p);
        prop_assert_eq!(run.hit.map(|c| c.members), reference.map(|c| c.members));
    }

    #[test]
    fn clusters_hold_their_centers(g in any_graph(1, 30), beta in 0.05f64..0.8, seed in any::<u64>()) {
        let mut net = Network::for_graph(&g).with_backend(Backend::Charged);
        let c = exp_shift_clustering(&mut net, &g, beta, g.n(), &mut seeded(seed)).unwrap();
        for &center in &c.centers {
            prop_assert_eq!(c.label[center], center);
            prop_assert_eq!(c.parent[center], None);
        }
        for v in 0..g.n() {
            if let Some(p) = c.parent[v] {
                prop_assert!(g.has_edge(v, p));
                prop_assert_eq!(c.label[p], c.label[v]);
                prop_assert!(c.epoch[p] <= c.epoch[v]);
            }
        }
    }

    #[test]
    fn split_history_grows(g in connected_graph(2, 30), beta in 0.2f64..1.0, seed in any::<u64>()) {
        let params = SplitParams::new(beta, 10.0, 3.0 / 16.0, g.n()).unwrap();
        let mut net = Network::for_graph(&g).with_backend(Backend::Charged);
        let split = dense_sparse_split(&mut net, &g, &params, &mut seeded(seed)).unwrap();
        for w in split.history.windows(2) {
            let later: BTreeSet<_> = w[1].iter().collect();
            prop_assert!(w[0].iter().all(|v| later.contains(v)));
        }
        prop_assert!(split.iterations() as f64 <= 2.0 * params.b - 1.0);
        let last = split.history.last().cloned().unwrap_or_default();
        prop_assert_eq!(last, (0..g.n()).filter(|&v| split.dense[v]).collect::<Vec<_>>());
    }

    #[test]
    fn low_diam_keeps_dense_edges(g in connected_graph(2, 30), beta in 0.1f64..1.0, seed in any::<u64>()) {
        let mut net = Network::for_graph(&g).with_backend(Backend::Charged);
        let out = low_diam_decomposition(&mut net, &g, beta, &LowDiamConfig::default(), &mut seeded(seed)).unwrap();
        for &(u, v) in &out.cut_edges {
            prop_assert!(!(out.split.dense[u] && out.split.dense[v]));
        }
        let mut covered: Vec<usize> = out.components.concat();
        covered.sort();
        prop_assert_eq!(covered, all(&g));
    }

    #[test]
    fn decomposition_invariants(g in any_graph(2, 24), eps in 0.2f64..0.9, seed in any::<u64>()) {
        let cfg = DecompConfig::for_profile(Profile::Desk);
        let run = |seed| {
            let mut net = Network::for_graph(&g).with_backend(Backend::Charged);
            expander_decomposition(&mut net, &g, eps, 2, &cfg, &mut seeded(seed)).unwrap()
        };
        let d = run(seed);
        prop_assert!(d.removed.total() as f64 <= eps * g.m() as f64);

        // Turning removed edges into loops keeps every degree, and the
        // components are exactly the connected parts of what is left.
        let mut rest = g.clone();
        for e in &d.removed_edges {
            rest.remove_edge_to_loops(e.u, e.v).unwrap();
        }
        for v in 0..g.n() {
            prop_assert_eq!(rest.degree(v), g.degree(v));
        }
        prop_assert_eq!(&rest.connected_components(), &d.components);

        for trace in &d.phase2 {
            for peel in &trace.peels {
                prop_assert!(peel.volume as f64 > trace.m[peel.level - 1] / (2.0 * trace.tau));
            }
        }
        prop_assert_eq!(d.removed_edges.iter().filter(|e| e.channel == Channel::Remove3).count(), d.removed.r3);
        prop_assert_eq!(serde_json::to_string(&d).unwrap(), serde_json::to_string(&run(seed)).unwrap());
    }

    #[test]
    fn triangles_match_brute_force(g in any_graph(3, 22), seed in any::<u64>()) {
        let mut net = Network::for_graph(&g).with_backend(Backend::Charged);
        let run = triangle_enumeration(&mut net, &g, 1.0 / 6.0, 2, &TriangleConfig::default(), &mut seeded(seed)).unwrap();
        prop_assert_eq!(&run.triangles, &brute_force_triangles(&g).unwrap());
        for w in run.levels.windows(2) {
            prop_assert!(w[1].edges < w[0].edges);
        }
    }
}
