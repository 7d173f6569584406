//! Undirected multigraph with per-edge length and capacity, plus the
//! graph-theoretic primitives the rest of the crate is built on.

mod conductance;
mod flow;
mod girth;
mod paths;

pub use conductance::{conductance_estimate, exact_conductance, ConductanceBounds, DEFAULT_EXACT_THRESHOLD};
pub use flow::{max_flow, FlowPath, MaxFlow};
pub use girth::{girth, remove_short_cycles, shortest_cycle, Cycle};
pub use paths::{
    bfs_tree, diameter, distances_from, shortest_distances, shortest_path_unique, vertices_within,
    BfsTree, DistanceMatrix, ShortestPath,
};

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub length: f64,
    pub capacity: f64,
}

impl Edge {
    pub fn new(u: usize, v: usize, length: f64, capacity: f64) -> Self {
        Edge { u, v, length, capacity }
    }

    /// Unit length and unit capacity.
    pub fn unit(u: usize, v: usize) -> Self {
        Edge::new(u, v, 1.0, 1.0)
    }

    /// The endpoint opposite to `x`.
    #[inline]
    pub fn other(&self, x: usize) -> usize {
        if self.u == x {
            self.v
        } else {
            self.u
        }
    }

    /// Endpoints ordered by vertex id.
    #[inline]
    pub fn ordered(&self) -> (usize, usize) {
        (self.u.min(self.v), self.u.max(self.v))
    }
}

/// An undirected multigraph on vertices `0..n`.
///
/// Edge ids are positions in [`Graph::edges`] and never change for a given
/// graph value. Self-loops are dropped on construction and counted. Parallel
/// edges are kept.
#[derive(Clone, Debug)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    // (neighbor, edge id), sorted
    adjacency: Vec<Vec<(usize, usize)>>,
    dropped_self_loops: usize,
}

impl Graph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        let mut kept = Vec::new();
        let mut dropped = 0;
        for e in edges {
            for x in [e.u, e.v] {
                if x >= n {
                    return Err(Error::VertexOutOfRange { vertex: x, n });
                }
            }
            if !(e.length >= 0.0 && e.length.is_finite()) || !(e.capacity >= 0.0 && e.capacity.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "edge ({}, {}) has invalid length {} or capacity {}",
                    e.u, e.v, e.length, e.capacity
                )));
            }
            if e.u == e.v {
                dropped += 1;
                continue;
            }
            kept.push(e);
        }
        let mut g = Graph::from_checked(n, kept);
        g.dropped_self_loops = dropped;
        Ok(g)
    }

    /// Unit-length, unit-capacity graph from endpoint pairs.
    pub fn from_unit_edges(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        Graph::new(n, pairs.iter().map(|&(u, v)| Edge::unit(u, v)))
    }

    fn from_checked(n: usize, edges: Vec<Edge>) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for (id, e) in edges.iter().enumerate() {
            adjacency[e.u].push((e.v, id));
            adjacency[e.v].push((e.u, id));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Graph {
            n,
            edges,
            adjacency,
            dropped_self_loops: 0,
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    #[inline]
    pub fn edge(&self, id: usize) -> &Edge {
        &self.edges[id]
    }

    /// `(neighbor, edge id)` pairs sorted by neighbor, then edge id.
    #[inline]
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn dropped_self_loops(&self) -> usize {
        self.dropped_self_loops
    }

    pub fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.n {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange { vertex: v, n: self.n })
        }
    }

    /// The common edge length if every edge has the same length.
    pub fn uniform_length(&self) -> Option<f64> {
        let first = self.edges.first()?.length;
        self.edges.iter().all(|e| e.length == first).then_some(first)
    }

    pub fn is_connected(&self) -> bool {
        if self.n <= 1 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &(w, _) in &self.adjacency[u] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }

    pub fn is_tree(&self) -> bool {
        self.n >= 1 && self.m() + 1 == self.n && self.is_connected()
    }

    /// Returns a copy without the given edge ids; remaining edges keep their
    /// relative order, so ids are renumbered densely.
    pub fn without_edges(&self, removed: &[usize]) -> Graph {
        let mut drop = vec![false; self.m()];
        for &id in removed {
            drop[id] = true;
        }
        let edges = self
            .edges
            .iter()
            .zip(&drop)
            .filter(|(_, &d)| !d)
            .map(|(e, _)| *e)
            .collect();
        let mut g = Graph::from_checked(self.n, edges);
        g.dropped_self_loops = self.dropped_self_loops;
        g
    }

    /// Serializes to the edge-list text format: `n m`, then `u v length capacity` per edge.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.n, self.m());
        for e in &self.edges {
            let _ = writeln!(out, "{} {} {} {}", e.u, e.v, e.length, e.capacity);
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Graph> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing header".into(),
        })?;
        let head: Vec<usize> = parse_fields(hline, header)?;
        if head.len() != 2 {
            return Err(Error::Parse {
                line: hline,
                message: "header must be `n m`".into(),
            });
        }
        let (n, m) = (head[0], head[1]);
        let mut edges = Vec::with_capacity(m);
        for (line, l) in lines {
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 4 {
                return Err(Error::Parse {
                    line,
                    message: "edge line must be `u v length capacity`".into(),
                });
            }
            let u = parse_one::<usize>(line, f[0])?;
            let v = parse_one::<usize>(line, f[1])?;
            let length = parse_one::<f64>(line, f[2])?;
            let capacity = parse_one::<f64>(line, f[3])?;
            edges.push(Edge::new(u, v, length, capacity));
        }
        if edges.len() != m {
            return Err(Error::Parse {
                line: 1,
                message: format!("header declares {m} edges, found {}", edges.len()),
            });
        }
        Graph::new(n, edges)
    }
}

fn parse_one<T: FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse {
        line,
        message: format!("cannot parse `{s}`"),
    })
}

fn parse_fields<T: FromStr>(line: usize, s: &str) -> Result<Vec<T>> {
    s.split_whitespace().map(|f| parse_one(line, f)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_loops_are_dropped_and_counted() {
        let g = Graph::from_unit_edges(3, &[(0, 0), (0, 1), (1, 2), (2, 2)]).unwrap();
        assert_eq!(g.m(), 2);
        assert_eq!(g.dropped_self_loops(), 2);
    }

    #[test]
    fn parallel_edges_are_kept() {
        let g = Graph::from_unit_edges(2, &[(0, 1), (1, 0)]).unwrap();
        assert_eq!(g.m(), 2);
        assert_eq!(g.degree(0), 2);
        assert_eq!(g.neighbors(0), &[(1, 0), (1, 1)]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            Graph::from_unit_edges(2, &[(0, 2)]),
            Err(Error::VertexOutOfRange { vertex: 2, n: 2 })
        ));
        assert!(Graph::new(2, [Edge::new(0, 1, -1.0, 1.0)]).is_err());
    }

    #[test]
    fn edge_list_round_trip_with_comments() {
        let text = "# a path\n3 2\n0 1 2 1 # first\n\n1 2 3 0.5\n";
        let g = Graph::from_edge_list(text).unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.edge(1), &Edge::new(1, 2, 3.0, 0.5));
        let again = Graph::from_edge_list(&g.to_edge_list()).unwrap();
        assert_eq!(again.edges(), g.edges());
    }

    #[test]
    fn edge_count_mismatch_is_an_error() {
        assert!(Graph::from_edge_list("3 3\n0 1 1 1\n").is_err());
    }

    #[test]
    fn without_edges_keeps_order() {
        let g = Graph::from_unit_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let h = g.without_edges(&[1]);
        let pairs: Vec<_> = h.edges().iter().map(|e| (e.u, e.v)).collect();
        assert_eq!(pairs, vec![(0, 1), (2, 3), (3, 0)]);
        assert!(h.is_tree());
    }
}
