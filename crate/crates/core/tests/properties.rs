mod common;

use proptest::prelude::*;

use zel::continuization::{con_distance, ConPoint, GirthEmbedder};
use zel::graph::{bfs_tree, conductance_estimate, exact_conductance, girth, max_flow, remove_short_cycles};
use zel::metric::{terminal_vector, tight_span_membership, validate_semimetric, Membership};
use zel::projection::{project_point, project_vertex};
use zel::solvers::{brute_canonical, brute_zero_ext, local_search_canonical, lp_feasible_value, SolveBudget};
use zel::{DistanceMatrix, Edge, Graph, EPS};

use common::{cycle, floyd_warshall, instance_on, random_connected, random_terminals, rng, synthesize, KINDS};

/// Edge list on `n` vertices, loops allowed (they are dropped).
fn multigraph(max_n: usize, max_m: usize, max_len: u32) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(move |n| {
        prop::collection::vec((0..n, 0..n, 1..=max_len), 0..=max_m).prop_map(move |es| {
            Graph::new(n, es.into_iter().map(|(u, v, l)| Edge::new(u, v, l as f64, 1.0))).unwrap()
        })
    })
}

/// Minimum length over edge subsets in which every touched vertex has
/// degree 2 and which are connected.
fn brute_girth(g: &Graph) -> f64 {
    let m = g.m();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << m) {
        let chosen: Vec<&Edge> = (0..m).filter(|i| mask >> i & 1 == 1).map(|i| g.edge(i)).collect();
        let mut deg = vec![0; g.n()];
        for e in &chosen {
            deg[e.u] += 1;
            deg[e.v] += 1;
        }
        if deg.iter().any(|&d| d != 0 && d != 2) {
            continue;
        }
        let sub = Graph::new(g.n(), chosen.iter().map(|e| **e)).unwrap();
        let start = chosen[0].u;
        let reach = zel::graph::distances_from(&sub, start);
        if (0..g.n()).any(|v| deg[v] == 2 && !reach[v].is_finite()) {
            continue;
        }
        best = best.min(chosen.iter().map(|e| e.length).sum());
    }
    best
}

fn brute_min_cut(g: &Graph, s: usize, t: usize) -> f64 {
    let n = g.n();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) {
        if mask >> s & 1 == 0 || mask >> t & 1 == 1 {
            continue;
        }
        let cut = g
            .edges()
            .iter()
            .filter(|e| (mask >> e.u & 1) != (mask >> e.v & 1))
            .map(|e| e.capacity)
            .sum();
        best = f64::min(best, cut);
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn girth_matches_cycle_enumeration(g in multigraph(8, 12, 3)) {
        let expected = brute_girth(&g);
        let got = girth(&g);
        prop_assert!(got == expected || (got - expected).abs() < EPS, "{got} vs {expected}");
    }

    #[test]
    fn max_flow_equals_min_cut(
        n in 2usize..=10,
        es in prop::collection::vec((0usize..10, 0usize..10, 1u32..=4), 0..30),
    ) {
        let g = Graph::new(
            n,
            es.into_iter().filter(|e| e.0 < n && e.1 < n).map(|(u, v, c)| Edge::new(u, v, 1.0, c as f64)),
        )
        .unwrap();
        let f = max_flow(&g, 0, n - 1).unwrap();
        prop_assert!((f.value - brute_min_cut(&g, 0, n - 1)).abs() < 1e-7);
    }

    #[test]
    fn unit_flow_paths_are_edge_disjoint(
        n in 2usize..=10,
        es in prop::collection::vec((0usize..10, 0usize..10), 0..30),
    ) {
        let pairs: Vec<_> = es.into_iter().filter(|e| e.0 < n && e.1 < n).collect();
        let g = Graph::from_unit_edges(n, &pairs).unwrap();
        let f = max_flow(&g, 0, n - 1).unwrap();
        let paths = f.paths.unwrap();
        prop_assert_eq!(paths.len() as f64, f.value);
        let mut used = vec![false; g.m()];
        for p in &paths {
            prop_assert_eq!(p.vertices[0], 0);
            prop_assert_eq!(*p.vertices.last().unwrap(), n - 1);
            for &id in &p.edges {
                prop_assert!(!used[id]);
                used[id] = true;
            }
        }
    }

    #[test]
    fn conductance_bracket_holds(seed in any::<u64>(), n in 4usize..=12, extra in 0usize..12) {
        let g = random_connected(n, extra, 1, &mut rng(seed));
        let exact = exact_conductance(&g).unwrap();
        let est = conductance_estimate(&g, 0).unwrap();
        prop_assert!(!est.exact);
        prop_assert!(est.lower <= exact + 1e-9 && exact <= est.upper + 1e-9, "{est:?} vs {exact}");
    }

    #[test]
    fn removal_clears_short_cycles(seed in any::<u64>(), n in 4usize..=30, extra in 0usize..40, threshold in 2.0f64..6.0) {
        let g = random_connected(n, extra, 1, &mut rng(seed));
        let tree = bfs_tree(&g, 0).unwrap();
        let (h, removed) = remove_short_cycles(&g, threshold, &tree).unwrap();
        prop_assert!(girth(&h) > threshold);
        prop_assert!(h.is_connected());
        prop_assert_eq!(h.m() + removed.len(), g.m());
        for id in removed {
            prop_assert!(!tree.contains_edge(id));
        }
    }

    #[test]
    fn floyd_warshall_closure_is_a_semimetric(
        k in 1usize..=7,
        raw in prop::collection::vec(0u32..10, 49),
    ) {
        let mut m: Vec<Vec<f64>> = (0..k)
            .map(|i| (0..k).map(|j| if i == j { 0.0 } else { raw[i.min(j) * 7 + i.max(j)] as f64 }).collect())
            .collect();
        floyd_warshall(&mut m);
        prop_assert!(validate_semimetric(&m).is_ok());
        if k >= 3 && m[0][1] + m[1][2] > 0.0 {
            m[0][2] = m[0][1] + m[1][2] + 1.0;
            m[2][0] = m[0][2];
            prop_assert!(validate_semimetric(&m).is_err());
        }
    }

    #[test]
    fn projection_is_a_nonexpansive_retraction(seed in any::<u64>(), n in 3usize..=20, extra in 0usize..20, k in 2usize..=5) {
        let mut r = rng(seed);
        let g = random_connected(n, extra, 4, &mut r);
        let k = k.min(n);
        let inst = instance_on(g, random_terminals(n, k, &mut r));
        let d = &inst.terminal_metric;
        let dist = DistanceMatrix::all_pairs(&inst.graph).unwrap();
        let xs: Vec<_> = (0..n).map(|v| project_vertex(&inst, v).unwrap()).collect();
        for (v, x) in xs.iter().enumerate() {
            prop_assert_eq!(tight_span_membership(&x.coords, d).unwrap(), Membership::Member);
            // projecting a member changes nothing
            prop_assert!(project_point(&x.coords, d).unwrap().linf(x) <= 1e-9);
            for u in 0..v {
                prop_assert!(x.linf(&xs[u]) <= dist.get(u, v) + 1e-9);
            }
            for i in 0..k {
                let t = terminal_vector(d, i).unwrap();
                prop_assert!((t.linf(x) - x.coords[i]).abs() <= 1e-9);
            }
        }
        for (i, &t) in inst.terminals.iter().enumerate() {
            prop_assert_eq!(&xs[t], &terminal_vector(d, i).unwrap());
        }
    }

    #[test]
    fn continuization_distance_is_a_metric(
        seed in any::<u64>(),
        n in 2usize..=12,
        extra in 0usize..10,
        picks in prop::collection::vec((any::<prop::sample::Index>(), 0.0f64..=1.0), 3),
    ) {
        let g = random_connected(n, extra, 4, &mut rng(seed));
        let dist = DistanceMatrix::all_pairs(&g).unwrap();
        let pts: Vec<ConPoint> = picks
            .iter()
            .map(|(i, s)| {
                let e = i.index(g.m());
                ConPoint::new(&g, e, s * g.edge(e).length).unwrap()
            })
            .collect();
        let d = |a: usize, b: usize| con_distance(&g, &dist, &pts[a], &pts[b]);
        prop_assert!(d(0, 0).abs() < 1e-12);
        prop_assert!((d(0, 1) - d(1, 0)).abs() < 1e-9);
        prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-9);
        let on_vertex = ConPoint::vertex(&g, g.edge(0).ordered().0).unwrap();
        prop_assert!((con_distance(&g, &dist, &on_vertex, &ConPoint::new(&g, 0, 0.0).unwrap())).abs() < 1e-12);
    }

    #[test]
    fn oracles_agree_at_f_equal_k(seed in any::<u64>(), n in 3usize..=8, extra in 0usize..8) {
        let mut r = rng(seed);
        let g = random_connected(n, extra, 3, &mut r);
        let k = n.saturating_sub(6).max(2);
        let inst = instance_on(g, random_terminals(n, k, &mut r));
        let budget = SolveBudget::default();
        let z = brute_zero_ext(&inst, &budget).unwrap();
        let (cs, c) = brute_canonical(&inst, k, &budget).unwrap();
        prop_assert_eq!(z.cost, c);
        prop_assert_eq!(cs.cost(&inst).unwrap(), c);
    }

    #[test]
    fn local_search_output_is_valid(seed in any::<u64>(), n in 4usize..=40, extra in 0usize..40, slack in 0usize..10) {
        let mut r = rng(seed);
        let g = random_connected(n, extra, 2, &mut r);
        let k = 2 + n / 8;
        let inst = instance_on(g, random_terminals(n, k, &mut r));
        let f_k = (k + slack).min(n);
        let budget = SolveBudget { max_iterations: 2_000, restarts: 2, seed, ..SolveBudget::default() };
        let res = local_search_canonical(&inst, f_k, &budget).unwrap();
        prop_assert!(res.cost <= res.initial_cost + EPS);
        prop_assert!(res.solution.partition.cluster_count() <= f_k);
        prop_assert!(res.solution.to_solution(&inst).validate(&inst).is_ok());
        if f_k == n {
            prop_assert_eq!(res.initial_cost, lp_feasible_value(&inst).unwrap());
        }
    }

    #[test]
    fn nearest_terminal_distance_is_lipschitz(seed in any::<u64>(), g in 6usize..=40, k in 2usize..=4, kind in 0usize..3) {
        let mut r = rng(seed);
        let inst = instance_on(cycle(g), random_terminals(g, k, &mut r));
        let sol = synthesize(&inst, KINDS[kind], &mut r);
        let emb = GirthEmbedder::new(&sol, &inst).unwrap();
        let count = sol.partition.cluster_count();
        for a in 0..count {
            for b in 0..count {
                prop_assert!((emb.a[a] - emb.a[b]).abs() <= sol.delta.get(a, b) + 1e-9);
            }
        }
    }
}
