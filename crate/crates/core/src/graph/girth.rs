use std::collections::VecDeque;
use std::sync::atomic::{AtomicUsize, Ordering};

use super::paths::dijkstra;
use super::{BfsTree, Graph};
use crate::error::{Error, Result};
use crate::{par, EPS};

/// A cycle given by its edge ids in traversal order.
#[derive(Clone, Debug, PartialEq)]
pub struct Cycle {
    pub length: f64,
    pub edges: Vec<usize>,
}

/// Result of a BFS closed-walk search from one root, in hops.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct RootCycle {
    hops: usize,
    closing_edge: usize,
}

/// BFS from `root` over edges not in `removed`, looking for the shortest
/// closed walk `root ~> u - w ~> root` through a non-tree edge `(u, w)`.
/// Only walks of at most `cap` hops are reported. Returns the parent edges
/// too when `keep_parents` is set.
fn root_search(
    g: &Graph,
    removed: &[bool],
    root: usize,
    cap: usize,
    shared_best: Option<&AtomicUsize>,
    keep_parents: bool,
) -> (Option<RootCycle>, Vec<usize>) {
    let n = g.n();
    let mut depth = vec![usize::MAX; n];
    let mut parent = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    depth[root] = 0;
    queue.push_back(root);
    let mut best: Option<RootCycle> = None;
    let bound = |best: &Option<RootCycle>| {
        let local = best.map_or(usize::MAX, |b| b.hops);
        let shared = shared_best.map_or(usize::MAX, |s| s.load(Ordering::Relaxed));
        local.min(shared).min(cap.saturating_add(1))
    };
    while let Some(u) = queue.pop_front() {
        // any closed walk through u has at least 2 depth(u) hops
        if 2 * depth[u] >= bound(&best) {
            break;
        }
        for &(w, id) in g.neighbors(u) {
            if removed[id] || id == parent[u] {
                continue;
            }
            if depth[w] == usize::MAX {
                depth[w] = depth[u] + 1;
                parent[w] = id;
                queue.push_back(w);
            } else {
                let hops = depth[u] + depth[w] + 1;
                if hops < bound(&best) {
                    best = Some(RootCycle { hops, closing_edge: id });
                    if let Some(s) = shared_best {
                        s.fetch_min(hops, Ordering::Relaxed);
                    }
                }
            }
        }
    }
    (best, if keep_parents { parent } else { Vec::new() })
}

fn extract_root_cycle(g: &Graph, removed: &[bool], root: usize, cap: usize) -> Cycle {
    let (found, parent) = root_search(g, removed, root, cap, None, true);
    let found = found.expect("root was selected because it has a short cycle");
    let closing = g.edge(found.closing_edge);
    let climb = |mut v: usize| {
        let mut path = Vec::new();
        while v != root {
            let id = parent[v];
            path.push(id);
            v = g.edge(id).other(v);
        }
        path
    };
    let mut edges = climb(closing.u);
    edges.reverse();
    edges.push(found.closing_edge);
    edges.extend(climb(closing.v));
    let length = edges.iter().map(|&id| g.edge(id).length).sum();
    Cycle { length, edges }
}

/// Dijkstra that also records the edge used to reach each vertex.
fn dijkstra_parents(g: &Graph, source: usize, skip_edge: usize, limit: f64) -> (Vec<f64>, Vec<usize>) {
    let mut dist = vec![f64::INFINITY; g.n()];
    let mut parent = vec![usize::MAX; g.n()];
    let mut heap = std::collections::BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(std::cmp::Reverse((OrdF64(0.0), source)));
    while let Some(std::cmp::Reverse((OrdF64(d), u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(w, id) in g.neighbors(u) {
            if id == skip_edge {
                continue;
            }
            let nd = d + g.edge(id).length;
            if nd < dist[w] && nd <= limit {
                dist[w] = nd;
                parent[w] = id;
                heap.push(std::cmp::Reverse((OrdF64(nd), w)));
            }
        }
    }
    (dist, parent)
}

#[derive(Clone, Copy)]
struct OrdF64(f64);

impl PartialEq for OrdF64 {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn weighted_shortest_cycle(g: &Graph, removed: &[bool], cap: f64) -> Option<Cycle> {
    let (h, back) = masked_graph(g, removed);
    let limit = cap + EPS;
    let through = par::map_range(h.m(), |id| {
        let e = h.edge(id);
        let d = dijkstra(&h, e.u, Some(id), limit - e.length)[e.v];
        Some(e.length + d).filter(|&l| l <= limit)
    });
    // first minimum wins, i.e. the smallest edge id
    let (best, length) = through
        .iter()
        .enumerate()
        .filter_map(|(id, l)| l.map(|l| (id, l)))
        .fold(None::<(usize, f64)>, |acc, (id, l)| match acc {
            Some((_, bl)) if bl <= l => acc,
            _ => Some((id, l)),
        })?;
    let e = h.edge(best);
    let (_, parent) = dijkstra_parents(&h, e.u, best, limit - e.length);
    let mut edges = Vec::new();
    let mut at = e.v;
    while at != e.u {
        let id = parent[at];
        edges.push(back[id]);
        at = h.edge(id).other(at);
    }
    edges.reverse();
    edges.push(back[best]);
    Some(Cycle { length, edges })
}

/// Graph restricted to live edges, with the original id of each kept edge.
fn masked_graph(g: &Graph, removed: &[bool]) -> (Graph, Vec<usize>) {
    let dead: Vec<usize> = (0..g.m()).filter(|&i| removed[i]).collect();
    let back = (0..g.m()).filter(|&i| !removed[i]).collect();
    (g.without_edges(&dead), back)
}

fn hop_length(g: &Graph) -> Option<f64> {
    g.uniform_length().filter(|&l| l > 0.0)
}

fn shortest_cycle_masked(g: &Graph, removed: &[bool], cap: f64) -> Option<Cycle> {
    if let Some(len) = hop_length(g) {
        let cap_hops = ((cap + EPS) / len).floor();
        if cap_hops < 2.0 {
            return None;
        }
        let cap_hops = cap_hops.min(usize::MAX as f64 / 4.0) as usize;
        let per_root = par::map_range(g.n(), |r| root_search(g, removed, r, cap_hops, None, false).0);
        let (root, _) = per_root
            .iter()
            .enumerate()
            .filter_map(|(r, c)| c.map(|c| (r, c.hops)))
            .min_by_key(|&(r, h)| (h, r))?;
        return Some(extract_root_cycle(g, removed, root, cap_hops));
    }
    weighted_shortest_cycle(g, removed, cap)
}

/// The shortest cycle of weight at most `cap`, chosen deterministically.
///
/// With uniform edge lengths the cycle is found by BFS from every vertex and
/// the first root (by id) achieving the minimum wins. Otherwise each edge is
/// tried with the shortest path between its endpoints and the smallest edge
/// id achieving the minimum wins.
pub fn shortest_cycle(g: &Graph, cap: f64) -> Option<Cycle> {
    shortest_cycle_masked(g, &vec![false; g.m()], cap)
}

/// Minimum total length over all cycles; `f64::INFINITY` for forests.
/// Two parallel edges form a cycle.
pub fn girth(g: &Graph) -> f64 {
    let removed = vec![false; g.m()];
    if let Some(len) = hop_length(g) {
        let best = AtomicUsize::new(usize::MAX);
        let _ = par::map_range(g.n(), |r| root_search(g, &removed, r, usize::MAX / 4, Some(&best), false).0);
        return match best.into_inner() {
            usize::MAX => f64::INFINITY,
            hops => hops as f64 * len,
        };
    }
    par::map_range(g.m(), |id| {
        let e = g.edge(id);
        e.length + dijkstra(g, e.u, Some(id), f64::INFINITY)[e.v]
    })
    .into_iter()
    .fold(f64::INFINITY, f64::min)
}

/// Deletes non-tree edges until no cycle of weight at most `threshold` remains.
///
/// Each round takes the deterministic shortest cycle (see [`shortest_cycle`])
/// and deletes its non-tree edge of largest id. Returns the new graph and the
/// removed edge ids (ids of `g`) in removal order.
pub fn remove_short_cycles(g: &Graph, threshold: f64, tree: &BfsTree) -> Result<(Graph, Vec<usize>)> {
    if !(threshold >= 0.0) {
        return Err(Error::InvalidArgument(format!("threshold {threshold} must be nonnegative")));
    }
    if tree.parent_edge.len() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            found: tree.parent_edge.len(),
        });
    }
    let in_tree = tree.edge_mask(g.m());
    let mut removed = vec![false; g.m()];
    let mut log = Vec::new();

    let pick = |cycle: &Cycle| -> Result<usize> {
        cycle
            .edges
            .iter()
            .copied()
            .filter(|&id| !in_tree[id])
            .max()
            .ok_or_else(|| Error::NoRemovableEdge { cycle: cycle.edges.clone() })
    };

    match hop_length(g) {
        Some(len) => {
            let cap_hops = ((threshold + EPS) / len).floor();
            if cap_hops >= 2.0 {
                let cap_hops = cap_hops.min(usize::MAX as f64 / 4.0) as usize;
                let reach = cap_hops / 2;
                let mut cache: Vec<Option<RootCycle>> =
                    par::map_range(g.n(), |r| root_search(g, &removed, r, cap_hops, None, false).0);
                loop {
                    let Some((root, _)) = cache
                        .iter()
                        .enumerate()
                        .filter_map(|(r, c)| c.map(|c| (r, c.hops)))
                        .min_by_key(|&(r, h)| (h, r))
                    else {
                        break;
                    };
                    let cycle = extract_root_cycle(g, &removed, root, cap_hops);
                    let victim = pick(&cycle)?;
                    // roots whose search could have scanned the victim edge
                    let e = g.edge(victim);
                    let mut stale = vec![false; g.n()];
                    for start in [e.u, e.v] {
                        for v in ball_hops(g, &removed, start, reach) {
                            stale[v] = true;
                        }
                    }
                    removed[victim] = true;
                    log.push(victim);
                    let stale: Vec<usize> = (0..g.n()).filter(|&v| stale[v]).collect();
                    let fresh = par::map_slice(&stale, |&r| root_search(g, &removed, r, cap_hops, None, false).0);
                    for (r, c) in stale.into_iter().zip(fresh) {
                        cache[r] = c;
                    }
                }
            }
        }
        None => {
            while let Some(cycle) = shortest_cycle_masked(g, &removed, threshold) {
                let victim = pick(&cycle)?;
                removed[victim] = true;
                log.push(victim);
            }
        }
    }
    Ok((g.without_edges(&log), log))
}

fn ball_hops(g: &Graph, removed: &[bool], start: usize, radius: usize) -> Vec<usize> {
    let mut seen = vec![usize::MAX; g.n()];
    let mut queue = VecDeque::new();
    let mut out = vec![start];
    seen[start] = 0;
    queue.push_back(start);
    while let Some(u) = queue.pop_front() {
        if seen[u] == radius {
            continue;
        }
        for &(w, id) in g.neighbors(u) {
            if !removed[id] && seen[w] == usize::MAX {
                seen[w] = seen[u] + 1;
                out.push(w);
                queue.push_back(w);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{bfs_tree, Edge};

    fn cycle(n: usize) -> Graph {
        let pairs: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::from_unit_edges(n, &pairs).unwrap()
    }

    #[test]
    fn girth_examples() {
        let tree = Graph::from_unit_edges(5, &[(0, 1), (1, 2), (1, 3), (3, 4)]).unwrap();
        assert_eq!(girth(&tree), f64::INFINITY);
        assert_eq!(girth(&cycle(5)), 5.0);
        let parallel = Graph::from_unit_edges(2, &[(0, 1), (0, 1)]).unwrap();
        assert_eq!(girth(&parallel), 2.0);
    }

    #[test]
    fn weighted_girth_uses_edge_lengths() {
        let g = Graph::new(
            4,
            [
                Edge::new(0, 1, 1.0, 1.0),
                Edge::new(1, 2, 1.0, 1.0),
                Edge::new(2, 0, 5.0, 1.0),
                Edge::new(2, 3, 1.0, 1.0),
                Edge::new(3, 0, 1.0, 1.0),
            ],
        )
        .unwrap();
        assert_eq!(girth(&g), 4.0);
        let c = shortest_cycle(&g, 10.0).unwrap();
        assert_eq!(c.length, 4.0);
        let mut ids = c.edges.clone();
        ids.sort();
        assert_eq!(ids, vec![0, 1, 3, 4]);
    }

    #[test]
    fn shortest_cycle_is_a_closed_edge_sequence() {
        let g = Graph::from_unit_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 0), (3, 4), (4, 5), (5, 3)]).unwrap();
        let c = shortest_cycle(&g, 10.0).unwrap();
        assert_eq!(c.length, 3.0);
        let mut ids = c.edges.clone();
        ids.sort();
        assert_eq!(ids, vec![4, 5, 6]);
        assert!(shortest_cycle(&g, 2.0).is_none());
    }

    #[test]
    fn triangle_loses_its_non_tree_edge() {
        let g = cycle(3);
        let tree = bfs_tree(&g, 0).unwrap();
        // tree edges are (0,1) and (2,0); (1,2) is the only non-tree edge
        assert_eq!(tree.edge_mask(3), vec![true, false, true]);
        let (h, removed) = remove_short_cycles(&g, 3.0, &tree).unwrap();
        assert_eq!(removed, vec![1]);
        assert!(h.is_tree());
    }

    #[test]
    fn long_cycles_survive() {
        let g = cycle(5);
        let tree = bfs_tree(&g, 0).unwrap();
        let (h, removed) = remove_short_cycles(&g, 4.0, &tree).unwrap();
        assert!(removed.is_empty());
        assert_eq!(h.m(), 5);
    }

    #[test]
    fn threshold_one_never_removes_from_simple_graphs() {
        let g = Graph::from_unit_edges(4, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 0)]).unwrap();
        let tree = bfs_tree(&g, 0).unwrap();
        let (_, removed) = remove_short_cycles(&g, 1.0, &tree).unwrap();
        assert!(removed.is_empty());
    }

    #[test]
    fn removal_reaches_girth_above_threshold() {
        let g = Graph::from_unit_edges(
            6,
            &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 2), (0, 1), (1, 4)],
        )
        .unwrap();
        let tree = bfs_tree(&g, 0).unwrap();
        let (h, removed) = remove_short_cycles(&g, 4.0, &tree).unwrap();
        assert!(girth(&h) > 4.0);
        let mask = tree.edge_mask(g.m());
        assert!(removed.iter().all(|&id| !mask[id]));
    }

    #[test]
    fn weighted_removal_matches_threshold() {
        let g = Graph::new(
            3,
            [Edge::new(0, 1, 1.0, 1.0), Edge::new(1, 2, 2.0, 1.0), Edge::new(2, 0, 1.5, 1.0)],
        )
        .unwrap();
        let tree = bfs_tree(&g, 0).unwrap();
        let (h, removed) = remove_short_cycles(&g, 4.5, &tree).unwrap();
        assert_eq!(removed, vec![1]);
        assert_eq!(girth(&h), f64::INFINITY);
        let (_, none) = remove_short_cycles(&g, 4.4, &tree).unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn corrupted_tree_is_reported() {
        let g = cycle(3);
        // claims all three edges are tree edges
        let tree = BfsTree {
            root: 0,
            parent_edge: vec![Some(2), Some(0), Some(1)],
            depth: vec![0, 1, 2],
        };
        assert!(matches!(
            remove_short_cycles(&g, 3.0, &tree),
            Err(Error::NoRemovableEdge { .. })
        ));
    }
}
