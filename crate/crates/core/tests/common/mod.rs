//! Random graphs, instances and valid solutions shared by the integration
//! tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use zel::metric::{linf, terminal_vector};
use zel::projection::project_vertex;
use zel::{CanonicalSolution, Edge, Graph, Instance, InstanceConfig, Partition, SemiMetric, Solution, TerminalRule};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn length(rng: &mut ChaCha8Rng, max_len: u32) -> f64 {
    rng.random_range(1..=max_len) as f64
}

/// Uniform random recursive tree on shuffled labels, integer lengths in
/// `1..=max_len`.
pub fn random_tree(n: usize, max_len: u32, rng: &mut ChaCha8Rng) -> Graph {
    let mut label: Vec<usize> = (0..n).collect();
    label.shuffle(rng);
    let edges: Vec<Edge> = (1..n)
        .map(|i| {
            let p = rng.random_range(0..i);
            Edge::new(label[p], label[i], length(rng, max_len), 1.0)
        })
        .collect();
    Graph::new(n, edges).unwrap()
}

/// A random tree plus `extra` random non-loop edges.
pub fn random_connected(n: usize, extra: usize, max_len: u32, rng: &mut ChaCha8Rng) -> Graph {
    let mut edges = random_tree(n, max_len, rng).edges().to_vec();
    for _ in 0..extra {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u != v {
            edges.push(Edge::new(u, v, length(rng, max_len), 1.0));
        }
    }
    Graph::new(n, edges).unwrap()
}

pub fn cycle(g: usize) -> Graph {
    let pairs: Vec<_> = (0..g).map(|i| (i, (i + 1) % g)).collect();
    Graph::from_unit_edges(g, &pairs).unwrap()
}

pub fn random_terminals(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(rng);
    let mut t = ids[..k].to_vec();
    t.sort_unstable();
    t
}

pub fn instance_on(g: Graph, terminals: Vec<usize>) -> Instance {
    let cfg = InstanceConfig {
        n: g.n(),
        seed: 0,
        girth_coefficient: 1.0,
        terminal_rule: TerminalRule::Prefix,
    };
    Instance::from_parts(cfg, g, terminals, Vec::new()).unwrap()
}

/// Terminals alone in distinct clusters centered at themselves, `extra`
/// random non-terminal centers, and every other vertex in a random cluster.
pub fn random_canonical(inst: &Instance, extra: usize, rng: &mut ChaCha8Rng) -> CanonicalSolution {
    let n = inst.n();
    let mut free: Vec<usize> = (0..n).filter(|v| !inst.terminals.contains(v)).collect();
    free.shuffle(rng);
    let extra = extra.min(free.len());
    let centers: Vec<usize> = inst.terminals.iter().copied().chain(free[..extra].iter().copied()).collect();
    let mut map = vec![usize::MAX; n];
    for &c in &centers {
        map[c] = c;
    }
    for &v in &free[extra..] {
        map[v] = centers[rng.random_range(0..centers.len())];
    }
    CanonicalSolution::from_vertex_map(&map, inst).unwrap()
}

/// Shortest-path closure in place.
pub fn floyd_warshall(m: &mut [Vec<f64>]) {
    let k = m.len();
    for via in 0..k {
        for i in 0..k {
            for j in 0..k {
                let through = m[i][via] + m[via][j];
                if through < m[i][j] {
                    m[i][j] = through;
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub enum SolutionKind {
    /// Canonical `δ` from random centers.
    Canonical,
    /// Canonical `δ` with random entries raised, then metric closure.
    Inflated,
    /// Clusters placed at tight-span points, `δ` the `ℓ∞` distance.
    TightSpan,
}

pub const KINDS: [SolutionKind; 3] = [SolutionKind::Canonical, SolutionKind::Inflated, SolutionKind::TightSpan];

/// A valid solution of the given kind. Raising entries never shortens a
/// path, so the closure keeps terminal distances.
pub fn synthesize(inst: &Instance, kind: SolutionKind, rng: &mut ChaCha8Rng) -> Solution {
    let extra = rng.random_range(0..=inst.n() - inst.k());
    let cs = random_canonical(inst, extra, rng);
    let partition: Partition = cs.partition.clone();
    let count = partition.cluster_count();
    let tc = partition.terminal_clusters(inst).unwrap();
    let mut is_tc = vec![false; count];
    for &c in &tc {
        is_tc[c] = true;
    }
    let rows = match kind {
        SolutionKind::Canonical => cs.canonical_delta(inst).to_rows(),
        SolutionKind::Inflated => {
            let mut m = cs.canonical_delta(inst).to_rows();
            for a in 0..count {
                for b in a + 1..count {
                    if !(is_tc[a] && is_tc[b]) && rng.random_bool(0.5) {
                        let bump = rng.random_range(0..=3) as f64;
                        m[a][b] += bump;
                        m[b][a] += bump;
                    }
                }
            }
            floyd_warshall(&mut m);
            m
        }
        SolutionKind::TightSpan => {
            let d = &inst.terminal_metric;
            let points: Vec<Vec<f64>> = (0..count)
                .map(|c| match tc.iter().position(|&x| x == c) {
                    Some(i) => terminal_vector(d, i).unwrap().coords,
                    None => project_vertex(inst, rng.random_range(0..inst.n())).unwrap().coords,
                })
                .collect();
            (0..count).map(|a| (0..count).map(|b| linf(&points[a], &points[b])).collect()).collect()
        }
    };
    let sol = Solution {
        partition,
        delta: SemiMetric::new(rows).unwrap(),
    };
    sol.validate(inst).unwrap();
    sol
}
