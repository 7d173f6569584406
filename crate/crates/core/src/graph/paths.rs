use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use super::Graph;
use crate::error::{Error, Result};
use crate::{par, EPS};

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry {
    dist: f64,
    vertex: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, then vertex id
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Hop distances from `source`, `usize::MAX` when unreachable.
pub(crate) fn bfs_hops(g: &Graph, source: usize) -> Vec<usize> {
    let mut hops = vec![usize::MAX; g.n()];
    let mut queue = VecDeque::new();
    hops[source] = 0;
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        for &(w, _) in g.neighbors(u) {
            if hops[w] == usize::MAX {
                hops[w] = hops[u] + 1;
                queue.push_back(w);
            }
        }
    }
    hops
}

/// Dijkstra from `source` ignoring `skip_edge`, pruned at `limit`.
pub(crate) fn dijkstra(g: &Graph, source: usize, skip_edge: Option<usize>, limit: f64) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; g.n()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapEntry { dist: 0.0, vertex: source });
    while let Some(HeapEntry { dist: d, vertex: u }) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(w, id) in g.neighbors(u) {
            if Some(id) == skip_edge {
                continue;
            }
            let nd = d + g.edge(id).length;
            if nd < dist[w] && nd <= limit {
                dist[w] = nd;
                heap.push(HeapEntry { dist: nd, vertex: w });
            }
        }
    }
    dist
}

/// Single-source distances; unreachable vertices get `f64::INFINITY`.
///
/// Uses BFS when all edge lengths are equal, Dijkstra otherwise.
pub fn distances_from(g: &Graph, source: usize) -> Vec<f64> {
    match g.uniform_length() {
        Some(len) => bfs_hops(g, source)
            .into_iter()
            .map(|h| if h == usize::MAX { f64::INFINITY } else { h as f64 * len })
            .collect(),
        None if g.m() == 0 => {
            let mut d = vec![f64::INFINITY; g.n()];
            d[source] = 0.0;
            d
        }
        None => dijkstra(g, source, None, f64::INFINITY),
    }
}

/// Exact single-source shortest-path distances; fails if some vertex is unreachable.
pub fn shortest_distances(g: &Graph, source: usize) -> Result<Vec<f64>> {
    g.check_vertex(source)?;
    let d = distances_from(g, source);
    match d.iter().position(|x| x.is_infinite()) {
        Some(vertex) => Err(Error::DisconnectedGraph { from: source, vertex }),
        None => Ok(d),
    }
}

/// Vertices within distance `radius` of `source`, with their distances.
pub fn vertices_within(g: &Graph, source: usize, radius: f64) -> Vec<(usize, f64)> {
    let limit = radius + EPS;
    let dist = match g.uniform_length() {
        Some(len) if len > 0.0 => {
            let max_hops = (limit / len).floor() as usize;
            let mut hops = vec![usize::MAX; g.n()];
            let mut queue = VecDeque::new();
            let mut out = vec![(source, 0.0)];
            hops[source] = 0;
            queue.push_back(source);
            while let Some(u) = queue.pop_front() {
                if hops[u] == max_hops {
                    continue;
                }
                for &(w, _) in g.neighbors(u) {
                    if hops[w] == usize::MAX {
                        hops[w] = hops[u] + 1;
                        out.push((w, hops[w] as f64 * len));
                        queue.push_back(w);
                    }
                }
            }
            return out;
        }
        _ => dijkstra(g, source, None, limit),
    };
    dist.into_iter()
        .enumerate()
        .filter(|(_, d)| *d <= limit)
        .collect()
}

pub fn diameter(g: &Graph) -> Result<f64> {
    if g.n() == 0 {
        return Ok(0.0);
    }
    let eccentricities = par::map_range(g.n(), |s| shortest_distances(g, s).map(|d| d.into_iter().fold(0.0, f64::max)));
    let mut best = 0.0f64;
    for e in eccentricities {
        best = best.max(e?);
    }
    Ok(best)
}

/// Dense all-pairs shortest-path distances.
#[derive(Clone, Debug)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Runs one single-source computation per vertex; fails on disconnected graphs.
    pub fn all_pairs(g: &Graph) -> Result<Self> {
        let rows = par::map_range(g.n(), |s| shortest_distances(g, s));
        let mut data = Vec::with_capacity(g.n() * g.n());
        for row in rows {
            data.extend(row?);
        }
        Ok(DistanceMatrix { n: g.n(), data })
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.data[u * self.n + v]
    }

    #[inline]
    pub fn row(&self, u: usize) -> &[f64] {
        &self.data[u * self.n..(u + 1) * self.n]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BfsTree {
    pub root: usize,
    /// Parent edge id of every vertex, `None` for the root.
    pub parent_edge: Vec<Option<usize>>,
    pub depth: Vec<usize>,
}

impl BfsTree {
    pub fn contains_edge(&self, id: usize) -> bool {
        self.parent_edge.contains(&Some(id))
    }

    /// Per-edge membership mask for a graph with `m` edges.
    pub fn edge_mask(&self, m: usize) -> Vec<bool> {
        let mut mask = vec![false; m];
        for id in self.parent_edge.iter().flatten() {
            mask[*id] = true;
        }
        mask
    }
}

/// Unweighted BFS tree; each vertex's parent is the smallest-id neighbor one
/// level up, ties between parallel edges broken by smallest edge id.
pub fn bfs_tree(g: &Graph, root: usize) -> Result<BfsTree> {
    g.check_vertex(root)?;
    let hops = bfs_hops(g, root);
    if let Some(vertex) = hops.iter().position(|&h| h == usize::MAX) {
        return Err(Error::DisconnectedGraph { from: root, vertex });
    }
    let parent_edge = (0..g.n())
        .map(|v| {
            if v == root {
                return None;
            }
            g.neighbors(v)
                .iter()
                .find(|&&(w, _)| hops[w] + 1 == hops[v])
                .map(|&(_, id)| id)
        })
        .collect();
    Ok(BfsTree {
        root,
        parent_edge,
        depth: hops,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShortestPath {
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
    pub length: f64,
    /// Whether this is the only shortest path between the endpoints.
    pub unique: bool,
}

/// One shortest `u`-`v` path (lexicographically smallest edge-id sequence)
/// and whether it is the unique shortest path.
pub fn shortest_path_unique(g: &Graph, u: usize, v: usize) -> Result<ShortestPath> {
    let from_u = shortest_distances(g, u)?;
    g.check_vertex(v)?;
    let from_v = distances_from(g, v);
    let total = from_u[v];

    let on_path = |a: usize, id: usize| {
        let e = g.edge(id);
        let b = e.other(a);
        (from_u[a] + e.length - from_u[b]).abs() <= EPS && (from_u[b] + from_v[b] - total).abs() <= EPS
    };

    // count shortest paths over the tight-edge DAG, capped at 2
    let mut order: Vec<usize> = (0..g.n()).collect();
    order.sort_by(|&a, &b| from_u[a].total_cmp(&from_u[b]).then(a.cmp(&b)));
    let mut count = vec![0u8; g.n()];
    count[u] = 1;
    for &a in &order {
        if count[a] == 0 {
            continue;
        }
        for &(b, id) in g.neighbors(a) {
            if from_u[b] > from_u[a] + EPS && (from_u[a] + g.edge(id).length - from_u[b]).abs() <= EPS {
                count[b] = count[b].saturating_add(count[a]).min(2);
            }
        }
    }
    let unique = count[v] == 1;

    let mut vertices = vec![u];
    let mut edges = Vec::new();
    let mut at = u;
    let mut visited = vec![false; g.n()];
    visited[u] = true;
    while at != v {
        let next = g
            .neighbors(at)
            .iter()
            .filter(|&&(b, id)| !visited[b] && on_path(at, id))
            .min_by_key(|&&(_, id)| id);
        let &(b, id) = next.expect("shortest-path DAG reaches the target");
        visited[b] = true;
        edges.push(id);
        vertices.push(b);
        at = b;
    }
    Ok(ShortestPath {
        vertices,
        edges,
        length: total,
        unique,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    fn path(n: usize) -> Graph {
        let pairs: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        Graph::from_unit_edges(n, &pairs).unwrap()
    }

    fn cycle(n: usize) -> Graph {
        let pairs: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::from_unit_edges(n, &pairs).unwrap()
    }

    fn complete(n: usize) -> Graph {
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                pairs.push((i, j));
            }
        }
        Graph::from_unit_edges(n, &pairs).unwrap()
    }

    #[test]
    fn distances_on_small_graphs() {
        assert_eq!(shortest_distances(&path(3), 0).unwrap(), vec![0.0, 1.0, 2.0]);
        assert_eq!(shortest_distances(&cycle(3), 0).unwrap(), vec![0.0, 1.0, 1.0]);
        let p3 = Graph::new(3, [Edge::new(0, 1, 2.0, 1.0), Edge::new(1, 2, 3.0, 1.0)]).unwrap();
        assert_eq!(shortest_distances(&p3, 0).unwrap(), vec![0.0, 2.0, 5.0]);
    }

    #[test]
    fn disconnected_is_an_error() {
        let g = Graph::from_unit_edges(3, &[(0, 1)]).unwrap();
        assert!(matches!(
            shortest_distances(&g, 0),
            Err(Error::DisconnectedGraph { from: 0, vertex: 2 })
        ));
        assert!(diameter(&g).is_err());
    }

    #[test]
    fn diameter_examples() {
        assert_eq!(diameter(&complete(4)).unwrap(), 1.0);
        assert_eq!(diameter(&path(4)).unwrap(), 3.0);
        assert_eq!(diameter(&Graph::new(1, []).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn bfs_tree_examples() {
        let star = Graph::from_unit_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let t = bfs_tree(&star, 0).unwrap();
        assert_eq!(t.depth, vec![0, 1, 1, 1]);

        let t = bfs_tree(&path(3), 1).unwrap();
        assert_eq!(t.depth, vec![1, 0, 1]);

        let c4 = cycle(4);
        let t = bfs_tree(&c4, 0).unwrap();
        assert_eq!(t.depth.iter().filter(|&&d| d == 2).count(), 1);
        // vertex 2 has parents 1 and 3 available; smallest id wins
        assert_eq!(t.parent_edge[2], Some(1));
    }

    #[test]
    fn bfs_tree_prefers_smallest_parallel_edge() {
        let g = Graph::from_unit_edges(2, &[(1, 0), (0, 1)]).unwrap();
        assert_eq!(bfs_tree(&g, 0).unwrap().parent_edge[1], Some(0));
    }

    #[test]
    fn unique_shortest_paths() {
        let tree = Graph::from_unit_edges(5, &[(0, 1), (1, 2), (1, 3), (3, 4)]).unwrap();
        let p = shortest_path_unique(&tree, 2, 4).unwrap();
        assert!(p.unique);
        assert_eq!(p.vertices, vec![2, 1, 3, 4]);
        assert_eq!(p.length, 3.0);

        let p = shortest_path_unique(&cycle(4), 0, 2).unwrap();
        assert!(!p.unique);
        assert_eq!(p.edges, vec![0, 1]);

        let p = shortest_path_unique(&cycle(5), 0, 1).unwrap();
        assert!(p.unique);
        assert_eq!(p.length, 1.0);
    }

    #[test]
    fn parallel_edges_make_paths_non_unique() {
        let g = Graph::from_unit_edges(2, &[(0, 1), (0, 1)]).unwrap();
        let p = shortest_path_unique(&g, 0, 1).unwrap();
        assert!(!p.unique);
        assert_eq!(p.edges, vec![0]);
    }

    #[test]
    fn ball_respects_radius() {
        let g = path(6);
        let mut ball: Vec<_> = vertices_within(&g, 2, 1.0).into_iter().map(|(v, _)| v).collect();
        ball.sort();
        assert_eq!(ball, vec![1, 2, 3]);
        let weighted = Graph::new(3, [Edge::new(0, 1, 0.5, 1.0), Edge::new(1, 2, 0.7, 1.0)]).unwrap();
        assert_eq!(vertices_within(&weighted, 0, 1.0).len(), 2);
    }

    #[test]
    fn distance_matrix_is_symmetric() {
        let g = cycle(7);
        let d = DistanceMatrix::all_pairs(&g).unwrap();
        for u in 0..7 {
            for v in 0..7 {
                assert_eq!(d.get(u, v), d.get(v, u));
            }
        }
        assert_eq!(d.max(), 3.0);
    }
}
